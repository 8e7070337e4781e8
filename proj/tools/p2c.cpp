// Command-line front end: formalize, classify, stats, progress, report,
// sample and record-fixtures.

#include "p2c/error.hpp"
#include "p2c/reports.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace {

using p2c::Error;
using p2c::ErrorCode;

struct Options {
    std::string backend = "replay";
    std::string config;
    std::string fixture_dir;
    std::string exemplar;
    int concurrency = 0;
    std::string out = "p2c-out";
    std::vector<std::string> sessions;
    std::string formalized;
    std::string cohort = "finished-all";
    std::string diff_mode = "linked";
    std::size_t churn_threshold = p2c::kDefaultChurnThreshold;
    std::uint64_t seed = 20250101;

    // progress
    std::string session_id;
    std::vector<std::string> solution_texts;
    std::vector<std::string> solution_files;

    // samplesize / sample
    std::size_t population = 0;
    double confidence = 0.95;
    double margin = 0.06;

    // record-fixtures
    std::string manifest;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read '" + path + "'", path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

p2c::RunConfig run_config(const Options& o) {
    p2c::RunConfig c;
    c.mode = p2c::parse_backend_mode(o.backend);
    if (!o.config.empty()) c.config_path = o.config;
    if (!o.exemplar.empty()) c.exemplar_path = o.exemplar;
    if (!o.fixture_dir.empty()) c.fixture_dir = o.fixture_dir;
    if (o.concurrency > 0) c.concurrency = o.concurrency;
    for (const auto& s : o.sessions) c.session_paths.emplace_back(s);
    c.out_dir = o.out;
    c.cohort = p2c::parse_cohort(o.cohort);
    c.diff_mode = p2c::parse_diff_mode(o.diff_mode);
    c.churn_threshold = o.churn_threshold;
    c.seed = o.seed;
    return c;
}

std::vector<p2c::PromptSession> sessions_of(const Options& o) {
    if (o.sessions.empty()) throw Error(ErrorCode::Config, "no session files given");
    return p2c::load_corpus(run_config(o).session_paths);
}

// Formalized corpus either from a previous `formalize` run or through the backend.
std::vector<p2c::FormalizedSession> corpus_of(const Options& o) {
    const auto sessions = sessions_of(o);
    if (!o.formalized.empty()) {
        return p2c::formalized_only(p2c::attach_formalizations(sessions, slurp(o.formalized)));
    }
    const auto config = run_config(o);
    auto setup = p2c::make_backend(config);
    const auto exemplar = p2c::resolve_exemplar(config);
    return p2c::formalized_only(
        p2c::formalize_corpus(sessions, exemplar, *setup.backend, setup.request, setup.concurrency));
}

void add_backend_options(CLI::App* cmd, Options& o) {
    cmd->add_option("--backend", o.backend, "live, replay or record")->check(CLI::IsMember({"live", "replay", "record"}));
    cmd->add_option("--config", o.config, "JSON backend configuration");
    cmd->add_option("--fixture-dir", o.fixture_dir, "replay/record fixture directory");
    cmd->add_option("--exemplar", o.exemplar, "few-shot exemplar file (built-in if omitted)");
    cmd->add_option("--concurrency", o.concurrency, "maximum requests in flight");
}

void add_corpus_options(CLI::App* cmd, Options& o) {
    cmd->add_option("sessions", o.sessions, "session JSONL files")->required();
    cmd->add_option("--formalized", o.formalized, "formalized.jsonl from a previous run");
    add_backend_options(cmd, o);
}

void emit(const std::string& text) { std::cout << text; }

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("p2c"));
    spdlog::set_pattern("%l: %v");

    CLI::App app{"Formalize prompt sessions into logical constraints and analyze their evolution"};
    app.set_version_flag("--version", std::string(p2c::kToolVersion));
    app.require_subcommand(1);
    Options o;

    auto* formalize = app.add_subcommand("formalize", "formalize sessions into formalized.jsonl");
    formalize->add_option("sessions", o.sessions, "session JSONL files")->required();
    add_backend_options(formalize, o);
    formalize->add_option("--out", o.out, "output directory");

    auto* classify = app.add_subcommand("classify", "classify consecutive prompt transitions");
    add_corpus_options(classify, o);
    classify->add_option("--out", o.out, "output directory");
    classify->add_option("--cohort", o.cohort, "cohort for heat maps")->check(CLI::IsMember({"all", "finished-all"}));

    auto* stats = app.add_subcommand("stats", "statistics written to standard output as CSV");
    stats->require_subcommand(1);
    auto* summary = stats->add_subcommand("summary", "constraint counts per task");
    add_corpus_options(summary, o);
    auto* correlate = stats->add_subcommand("correlate", "share of each change class against session length");
    add_corpus_options(correlate, o);
    auto* compare = stats->add_subcommand("compare", "diff sizes of successful and unsuccessful sessions");
    add_corpus_options(compare, o);
    compare->add_option("--diff-mode", o.diff_mode, "raw or linked")->check(CLI::IsMember({"raw", "linked"}));
    auto* series = stats->add_subcommand("series", "mean words and constraints per prompt position");
    add_corpus_options(series, o);
    auto* samplesize = stats->add_subcommand("samplesize", "sample size for manual review");
    samplesize->add_option("--population", o.population, "number of prompts")->required();
    samplesize->add_option("--confidence", o.confidence, "confidence level");
    samplesize->add_option("--margin", o.margin, "margin of error");

    auto* progress = app.add_subcommand("progress", "distance of each prompt to one or more solutions");
    progress->add_option("sessions", o.sessions, "session JSONL files")->required();
    progress->add_option("--session", o.session_id, "session id")->required();
    progress->add_option("--solution-text", o.solution_texts, "solution prompt text (repeatable)");
    progress->add_option("--solution-file", o.solution_files, "file holding a solution prompt (repeatable)");
    progress->add_option("--diff-mode", o.diff_mode, "raw or linked")->check(CLI::IsMember({"raw", "linked"}));
    progress->add_option("--churn-threshold", o.churn_threshold, "diff size that flags churn");
    progress->add_option("--out", o.out, "output directory");
    add_backend_options(progress, o);

    auto* report = app.add_subcommand("report", "full pipeline with manifest");
    report->add_option("sessions", o.sessions, "session JSONL files")->required();
    add_backend_options(report, o);
    report->add_option("--out", o.out, "output directory");
    report->add_option("--cohort", o.cohort, "cohort for heat maps")->check(CLI::IsMember({"all", "finished-all"}));
    report->add_option("--diff-mode", o.diff_mode, "raw or linked")->check(CLI::IsMember({"raw", "linked"}));
    report->add_option("--churn-threshold", o.churn_threshold, "diff size that flags churn");
    report->add_option("--seed", o.seed, "seed recorded in the manifest");

    auto* sample = app.add_subcommand("sample", "draw prompts for manual review");
    add_corpus_options(sample, o);
    sample->add_option("--confidence", o.confidence, "confidence level");
    sample->add_option("--margin", o.margin, "margin of error");
    sample->add_option("--seed", o.seed, "sampling seed");
    sample->add_option("--out", o.out, "output directory");

    auto* record = app.add_subcommand("record-fixtures", "write authored responses into a fixture store");
    record->add_option("--manifest", o.manifest, "authoring manifest")->required();
    record->add_option("--fixture-dir", o.fixture_dir, "fixture directory")->required();
    record->add_option("--exemplar", o.exemplar, "few-shot exemplar file (built-in if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*formalize) {
            const auto config = run_config(o);
            auto setup = p2c::make_backend(config);
            const auto exemplar = p2c::resolve_exemplar(config);
            const auto results = p2c::formalize_corpus(sessions_of(o), exemplar, *setup.backend, setup.request,
                                                       setup.concurrency);
            p2c::ArtifactWriter writer(o.out);
            writer.write("formalized.jsonl", p2c::to_jsonl(p2c::formalized_only(results)));
            writer.commit();
            const auto formalized = p2c::formalized_only(results).size();
            spdlog::info("{} of {} sessions formalized", formalized, results.size());
        } else if (*classify) {
            const auto corpus = corpus_of(o);
            p2c::ArtifactWriter writer(o.out);
            writer.write("transitions.csv", p2c::transitions_csv(corpus));
            std::vector<p2c::PromptSession> plain;
            for (const auto& fs : corpus) plain.push_back(fs.session);
            const bool finished_only = p2c::parse_cohort(o.cohort) == p2c::Cohort::FinishedAll;
            std::set<std::string> cohort;
            for (auto& u : p2c::finished_all_users(plain)) cohort.insert(u);
            for (const auto& task : p2c::task_ids(plain)) {
                std::vector<p2c::TransitionRecord> ts;
                for (const auto& fs : corpus) {
                    if (fs.session.task_id != task) continue;
                    if (finished_only && !cohort.contains(fs.session.user_id)) continue;
                    auto more = p2c::classify_session(fs);
                    ts.insert(ts.end(), more.begin(), more.end());
                }
                writer.write("heatmap_task_" + task + ".csv", p2c::heatmap_csv(p2c::heatmap(ts)));
            }
            writer.commit();
        } else if (*summary) {
            const auto corpus = corpus_of(o);
            std::vector<p2c::PromptSession> plain;
            for (const auto& fs : corpus) plain.push_back(fs.session);
            std::vector<p2c::SummaryRow> rows;
            for (const auto& task : p2c::task_ids(plain)) rows.push_back(p2c::summarize_constraints(corpus, task));
            emit(p2c::summary_csv(rows));
        } else if (*correlate) {
            std::vector<std::vector<p2c::TransitionRecord>> per_session;
            for (const auto& fs : corpus_of(o)) per_session.push_back(p2c::classify_session(fs));
            emit(p2c::correlation_csv(per_session));
        } else if (*compare) {
            emit(p2c::compare_csv(corpus_of(o), p2c::parse_diff_mode(o.diff_mode)));
        } else if (*series) {
            const auto corpus = corpus_of(o);
            std::vector<p2c::PromptSession> plain;
            for (const auto& fs : corpus) plain.push_back(fs.session);
            for (const auto& task : p2c::task_ids(plain)) {
                std::cout << "# task " << task << '\n';
                emit(p2c::series_csv(p2c::words_constraints_series(corpus, task)));
            }
        } else if (*samplesize) {
            emit(p2c::samplesize_csv(o.population, o.confidence, o.margin));
        } else if (*progress) {
            std::vector<std::string> solutions = o.solution_texts;
            for (const auto& f : o.solution_files) {
                auto text = slurp(f);
                while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
                solutions.push_back(std::move(text));
            }
            if (solutions.empty()) throw Error(ErrorCode::Config, "at least one solution prompt is required");
            const auto sessions = sessions_of(o);
            const auto it = std::find_if(sessions.begin(), sessions.end(),
                                         [&](const p2c::PromptSession& s) { return s.session_id == o.session_id; });
            if (it == sessions.end()) throw Error(ErrorCode::InvalidArgument, "unknown session " + o.session_id, o.session_id);
            const auto config = run_config(o);
            auto setup = p2c::make_backend(config);
            const auto exemplar = p2c::resolve_exemplar(config);
            const auto mode = p2c::parse_diff_mode(o.diff_mode);
            const auto result = p2c::measure_progress(*it, solutions, exemplar, *setup.backend, setup.request, mode);
            p2c::ArtifactWriter writer(o.out);
            writer.write("progress.json", p2c::progress_json(result, o.churn_threshold, mode));
            writer.write("radar.csv", p2c::radar_csv(result));
            writer.commit();
        } else if (*report) {
            const auto result = p2c::run_pipeline(run_config(o));
            spdlog::info("{} sessions, {} formalized, {} unformalized, {} backend calls, {} network calls",
                         result.sessions, result.formalized, result.unformalized, result.backend_calls,
                         result.network_calls);
        } else if (*sample) {
            const auto corpus = corpus_of(o);
            const auto items = p2c::sample_for_review(corpus, o.confidence, o.margin, o.seed);
            p2c::ArtifactWriter writer(o.out);
            writer.write("review.csv", p2c::review_csv(items, corpus));
            writer.commit();
        } else if (*record) {
            p2c::RunConfig config;
            if (!o.exemplar.empty()) config.exemplar_path = o.exemplar;
            const auto exemplar = p2c::resolve_exemplar(config);
            p2c::FixtureStore store(o.fixture_dir);
            const auto n = p2c::author_fixtures(o.manifest, store, exemplar);
            spdlog::info("{} fixtures written to {}", n, o.fixture_dir);
        }
    } catch (const Error& e) {
        std::cerr << p2c::error_report_json(e);
        return p2c::exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << p2c::error_report_json(Error(ErrorCode::Io, e.what()));
        return 1;
    }
    return 0;
}
