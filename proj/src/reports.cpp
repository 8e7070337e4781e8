#include "p2c/reports.hpp"

#include "p2c/error.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace p2c {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string num(double v) { return fmt::format("{:.6f}", v); }
std::string pval(double v) { return fmt::format("{:.6g}", v); }

std::string join_labels(const AtomSet& atoms, std::string_view sep = " ") {
    std::string out;
    for (const auto& a : atoms) {
        if (!out.empty()) out += sep;
        out += a;
    }
    return out;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read '" + path.string() + "'", path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

std::string_view to_string(BackendMode m) {
    switch (m) {
    case BackendMode::Live: return "live";
    case BackendMode::Replay: return "replay";
    case BackendMode::Record: return "record";
    }
    return "?";
}

std::string_view to_string(Cohort c) { return c == Cohort::All ? "all" : "finished-all"; }
std::string_view to_string(DiffMode m) { return m == DiffMode::Raw ? "raw" : "linked"; }

BackendMode parse_backend_mode(std::string_view s) {
    if (s == "live") return BackendMode::Live;
    if (s == "replay") return BackendMode::Replay;
    if (s == "record") return BackendMode::Record;
    throw Error(ErrorCode::Config, "unknown backend mode '" + std::string(s) + "'");
}

Cohort parse_cohort(std::string_view s) {
    if (s == "all") return Cohort::All;
    if (s == "finished-all") return Cohort::FinishedAll;
    throw Error(ErrorCode::Config, "unknown cohort '" + std::string(s) + "'");
}

DiffMode parse_diff_mode(std::string_view s) {
    if (s == "raw") return DiffMode::Raw;
    if (s == "linked") return DiffMode::Linked;
    throw Error(ErrorCode::Config, "unknown diff mode '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------

BackendSetup make_backend(const RunConfig& config) {
    const auto live = load_live_config(config.config_path, config.env);
    BackendSetup setup;
    setup.model_id = live.model;
    setup.request = RequestOptions{live.model, live.temperature, live.max_output_tokens};
    setup.concurrency = config.concurrency.value_or(live.concurrency);
    if (setup.concurrency < 1) throw Error(ErrorCode::Config, "concurrency must be at least 1");

    std::filesystem::path fixture_dir;
    if (config.fixture_dir) fixture_dir = *config.fixture_dir;
    else if (!live.fixture_dir.empty()) fixture_dir = live.fixture_dir;

    switch (config.mode) {
    case BackendMode::Replay: {
        if (fixture_dir.empty()) throw Error(ErrorCode::Config, "replay mode requires a fixture directory", "fixture_dir");
        if (!std::filesystem::is_directory(fixture_dir)) {
            throw Error(ErrorCode::Config, "fixture directory '" + fixture_dir.string() + "' does not exist",
                        fixture_dir.string());
        }
        setup.backend = std::make_shared<ReplayBackend>(std::make_shared<const FixtureStore>(fixture_dir));
        break;
    }
    case BackendMode::Live:
        setup.backend = std::make_shared<LiveBackend>(live);
        break;
    case BackendMode::Record: {
        if (fixture_dir.empty()) throw Error(ErrorCode::Config, "record mode requires a fixture directory", "fixture_dir");
        auto inner = std::make_shared<LiveBackend>(live);
        std::error_code ec;
        std::filesystem::create_directories(fixture_dir, ec);
        const auto probe = fixture_dir / ".write-probe";
        {
            std::ofstream out(probe);
            if (!out) {
                throw Error(ErrorCode::Config, "fixture directory '" + fixture_dir.string() + "' is not writable",
                            fixture_dir.string());
            }
        }
        std::filesystem::remove(probe, ec);
        setup.backend = std::make_shared<RecordingBackend>(inner, std::make_shared<FixtureStore>(fixture_dir));
        break;
    }
    }
    return setup;
}

FewShotExemplar resolve_exemplar(const RunConfig& config) {
    return config.exemplar_path ? FewShotExemplar::load(*config.exemplar_path) : FewShotExemplar::builtin();
}

std::vector<PromptSession> load_corpus(const std::vector<std::filesystem::path>& paths) {
    std::vector<PromptSession> all;
    std::set<std::string> ids;
    for (const auto& path : paths) {
        for (auto& s : load_sessions(path)) {
            if (!ids.insert(s.session_id).second) {
                throw Error(ErrorCode::DuplicateRecord, "session '" + s.session_id + "' appears in more than one file",
                            s.session_id);
            }
            all.push_back(std::move(s));
        }
    }
    std::sort(all.begin(), all.end(), [](const PromptSession& a, const PromptSession& b) {
        return std::tie(a.task_id, a.session_id) < std::tie(b.task_id, b.session_id);
    });
    return all;
}

std::vector<FormalizeResult> formalize_corpus(const std::vector<PromptSession>& sessions,
                                              const FewShotExemplar& exemplar, Backend& backend,
                                              const RequestOptions& options, int concurrency) {
    std::vector<std::optional<FormalizeResult>> slots(sessions.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            if (failed.load()) return;
            const auto i = next.fetch_add(1);
            if (i >= sessions.size()) return;
            try {
                slots[i] = formalize_session(sessions[i], exemplar, backend, options);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(concurrency, 1)), sessions.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);

    std::vector<FormalizeResult> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

std::vector<FormalizedSession> formalized_only(const std::vector<FormalizeResult>& results) {
    std::vector<FormalizedSession> out;
    for (const auto& r : results) {
        if (const auto* fs = std::get_if<FormalizedSession>(&r)) out.push_back(*fs);
    }
    return out;
}

std::vector<std::string> task_ids(const std::vector<PromptSession>& sessions) {
    std::set<std::string> ids;
    for (const auto& s : sessions) ids.insert(s.task_id);
    return {ids.begin(), ids.end()};
}

std::vector<std::string> finished_all_users(const std::vector<PromptSession>& sessions) {
    const auto tasks = task_ids(sessions);
    std::map<std::string, std::set<std::string>> solved;
    for (const auto& s : sessions) {
        if (s.outcome == Outcome::Success) solved[s.user_id].insert(s.task_id);
    }
    std::vector<std::string> users;
    for (const auto& [user, done] : solved) {
        if (done.size() == tasks.size()) users.push_back(user);
    }
    return users;
}

// ---------------------------------------------------------------------------

std::string transitions_csv(const std::vector<FormalizedSession>& corpus) {
    std::string out = "session_id,task_id,from_index,class,diff_raw,diff_linked\n";
    for (const auto& fs : corpus) {
        for (const auto& t : classify_session(fs)) {
            out += fmt::format("{},{},{},{},{},{}\n", csv_field(t.session_id), csv_field(fs.session.task_id),
                               t.from_index, to_string(t.cls), t.diff_size_raw, t.diff_size_linked);
        }
    }
    return out;
}

std::string heatmap_csv(const Heatmap& h) {
    std::string out = "step";
    for (auto cls : kTransitionClasses) out += fmt::format(",{}", to_string(cls));
    out += '\n';
    for (const auto& [step, counts] : h) {
        out += std::to_string(step);
        for (auto cls : kTransitionClasses) {
            auto it = counts.find(cls);
            out += fmt::format(",{}", it == counts.end() ? 0 : it->second);
        }
        out += '\n';
    }
    return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::string out = "Task,#Users,Mean,Std,Min,Q1,Median,Q3,Max\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{},{},{},{},{},{}\n", csv_field(r.task_id), r.n_users, num(r.mean), num(r.std),
                           num(r.min), num(r.q1), num(r.median), num(r.q3), num(r.max));
    }
    return out;
}

std::string correlation_csv(const std::vector<std::vector<TransitionRecord>>& per_session_transitions) {
    std::string out = "Activity,Correlation,p-value,sessions,method,sidedness,note\n";
    try {
        for (const auto& c : correlate_changes_with_length(per_session_transitions)) {
            out += fmt::format("{},{},{},{},{},two-sided,\n", to_string(c.cls), num(c.result.statistic),
                               pval(c.result.p_value), c.sessions, to_string(c.result.method));
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::Statistics) throw;
        // Per-class fallback so one constant class does not hide the others.
        out = "Activity,Correlation,p-value,sessions,method,sidedness,note\n";
        std::vector<double> lengths;
        std::map<TransitionClass, std::vector<double>> shares;
        for (const auto& ts : per_session_transitions) {
            if (ts.empty()) continue;
            lengths.push_back(static_cast<double>(ts.size() + 1));
            std::map<TransitionClass, std::size_t> counts;
            for (const auto& t : ts) ++counts[t.cls];
            for (auto cls : kTransitionClasses) {
                shares[cls].push_back(100.0 * static_cast<double>(counts[cls]) / static_cast<double>(ts.size()));
            }
        }
        for (auto cls : kTransitionClasses) {
            try {
                const auto r = pearson(shares[cls], lengths);
                out += fmt::format("{},{},{},{},{},two-sided,\n", to_string(cls), num(r.statistic), pval(r.p_value),
                                   lengths.size(), to_string(r.method));
            } catch (const Error& inner) {
                if (category_of(inner.code()) == ErrorCategory::Backend) throw;
                out += fmt::format("{},,,{},PearsonT,two-sided,{}\n", to_string(cls), lengths.size(),
                                   csv_field(inner.what()));
            }
        }
    }
    return out;
}

std::string compare_csv(const std::vector<FormalizedSession>& corpus, DiffMode mode) {
    std::vector<double> success, failure;
    for (const auto& fs : corpus) {
        if (fs.session.outcome == Outcome::Unknown) continue;
        auto& group = fs.session.outcome == Outcome::Success ? success : failure;
        for (const auto& t : classify_session(fs)) group.push_back(static_cast<double>(t.diff_size(mode)));
    }
    std::string out =
        "diff_mode,n_success,n_failure,mean_success,mean_failure,mean_overall,U,p-value,method,sidedness,note\n";
    try {
        const auto c = compare_diff_sizes(success, failure);
        out += fmt::format("{},{},{},{},{},{},{},{},{},two-sided,\n", to_string(mode), c.n_success, c.n_failure,
                           num(c.mean_success), num(c.mean_failure), num(c.mean_overall), num(c.test.statistic),
                           pval(c.test.p_value), to_string(c.test.method));
    } catch (const Error& e) {
        if (e.code() != ErrorCode::Statistics) throw;
        out += fmt::format("{},{},{},,,,,,,two-sided,{}\n", to_string(mode), success.size(), failure.size(),
                           csv_field(e.what()));
    }
    return out;
}

std::string series_csv(const std::vector<SeriesRow>& rows) {
    std::string out = "step,mean_words,mean_atoms,participants\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{}\n", r.step, num(r.mean_words), num(r.mean_atoms), r.participants);
    }
    return out;
}

std::string reduction_csv(const std::vector<ReductionFinding>& findings) {
    std::string out = "session_id,original_index,reduced_index,relation\n";
    for (const auto& f : findings) {
        out += fmt::format("{},{},{},{}\n", csv_field(f.session_id), f.original_index, f.reduced_index,
                           to_string(f.relation));
    }
    return out;
}

std::string reduction_summary_csv(const ReductionTable& table) {
    std::string out = "Relation,Identical constraints,Less constraints,More constraints\n";
    out += fmt::format("Number,{},{},{}\n", table.identical, table.fewer, table.more);
    out += fmt::format("# {} reduced prompt(s) with the same number of different constraints are excluded\n",
                       table.ambiguous);
    return out;
}

std::string samplesize_csv(std::size_t population, double confidence, double margin) {
    return fmt::format("population,confidence,margin,sample_size\n{},{},{},{}\n", population, confidence, margin,
                       required_sample_size(population, confidence, margin));
}

std::string progress_json(const ProgressResult& result, std::size_t churn_threshold, DiffMode mode) {
    ordered_json j;
    j["session_id"] = result.nearest.session_id;
    j["diff_mode"] = std::string(to_string(mode));
    j["churn_threshold"] = churn_threshold;
    j["student_prompts"] = result.student_prompt_count;
    j["solutions"] = ordered_json::array();
    for (std::size_t s = 0; s < result.per_solution.size(); ++s) {
        const auto& trace = result.per_solution[s];
        ordered_json sj;
        sj["solution"] = s + 1;
        sj["atoms"] = ordered_json::array();
        for (const auto& a : trace.solution_atoms) sj["atoms"].push_back(a);
        sj["distances"] = ordered_json::array();
        for (const auto& d : trace.distances) sj["distances"].push_back({{"prompt", d.prompt_index}, {"distance", d.distance}});
        j["solutions"].push_back(std::move(sj));
    }
    j["distances"] = ordered_json::array();
    for (const auto& d : result.nearest.distances) {
        j["distances"].push_back({{"prompt", d.prompt_index}, {"distance", d.distance}, {"solution", d.solution}});
    }
    j["churn"] = ordered_json::array();
    for (const auto& c : result.nearest.churn) j["churn"].push_back({{"prompt", c.prompt_index}, {"size", c.size}});
    j["interventions"] = ordered_json::array();
    for (const auto& p : detect_intervention_points(result.nearest, churn_threshold)) {
        j["interventions"].push_back({{"prompt", p.prompt_index}, {"kind", std::string(to_string(p.kind))}});
    }
    j["descriptions"] = ordered_json::object();
    for (const auto& [label, desc] : result.descriptions) j["descriptions"][label] = desc;
    j["metadata"] = {{"stagnation_rule", fmt::format("heuristic: {} consecutive non-decreasing non-zero distances",
                                                     kStagnationWindow)},
                     {"churn_rule", "diff size against the previous prompt >= churn_threshold"}};
    return j.dump(2) + "\n";
}

std::string radar_csv(const ProgressResult& result) {
    AtomSet labels;
    for (const auto& f : result.joint) labels.insert(f.atoms.begin(), f.atoms.end());
    std::string out = "prompt";
    for (const auto& l : labels) out += "," + l;
    out += '\n';
    for (std::size_t i = 0; i < result.joint.size(); ++i) {
        const auto& f = result.joint[i];
        out += i < result.student_prompt_count ? std::to_string(f.prompt_index)
                                               : "S" + std::to_string(i - result.student_prompt_count + 1);
        for (const auto& l : labels) out += f.atoms.contains(l) ? ",1" : ",0";
        out += '\n';
    }
    return out;
}

std::vector<ReviewItem> sample_for_review(const std::vector<FormalizedSession>& corpus, double confidence,
                                          double margin, std::uint64_t seed) {
    std::vector<ReviewItem> population;
    for (const auto& fs : corpus) {
        for (std::size_t i = 0; i < fs.session.prompts.size(); ++i) {
            population.push_back({fs.session.session_id, fs.session.prompts[i].index, fs.session.prompts[i].text,
                                  fs.formalizations[i].atoms});
        }
    }
    if (population.empty()) throw Error(ErrorCode::InvalidArgument, "cannot sample from an empty corpus");
    const auto wanted = required_sample_size(population.size(), confidence, margin);
    if (wanted >= population.size()) {
        if (wanted > population.size()) {
            spdlog::warn("sample size {} exceeds population {}; returning every prompt", wanted, population.size());
        }
        return population;
    }
    std::vector<ReviewItem> sample;
    sample.reserve(wanted);
    std::mt19937_64 rng(seed);
    std::sample(population.begin(), population.end(), std::back_inserter(sample), wanted, rng);
    return sample;
}

std::string review_csv(const std::vector<ReviewItem>& items, const std::vector<FormalizedSession>& corpus) {
    std::map<std::string, const DescriptionMap*> descriptions;
    for (const auto& fs : corpus) descriptions[fs.session.session_id] = &fs.descriptions;
    std::string out = "session_id,index,text,atoms,descriptions,correct\n";
    for (const auto& item : items) {
        std::string desc;
        if (auto it = descriptions.find(item.session_id); it != descriptions.end()) {
            for (const auto& a : item.atoms) {
                if (auto d = it->second->find(a); d != it->second->end()) {
                    if (!desc.empty()) desc += " | ";
                    desc += a + ": " + d->second;
                }
            }
        }
        out += fmt::format("{},{},{},{},{},\n", csv_field(item.session_id), item.index, csv_field(item.text),
                           csv_field(join_labels(item.atoms, " ∧ ")), csv_field(desc));
    }
    return out;
}

// ---------------------------------------------------------------------------

ArtifactWriter::ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create output directory '" + dir_.string() + "'", dir_.string());
}

void ArtifactWriter::write(const std::string& name, std::string_view content) {
    const auto path = dir_ / (name + ".partial");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'", path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'", path.string());
    names_.push_back(name);
}

void ArtifactWriter::commit() {
    for (const auto& name : names_) {
        std::error_code ec;
        std::filesystem::rename(dir_ / (name + ".partial"), dir_ / name, ec);
        if (ec) throw Error(ErrorCode::Io, "cannot finalize '" + name + "': " + ec.message(), name);
    }
}

PipelineResult run_pipeline(const RunConfig& config) {
    if (config.session_paths.empty()) throw Error(ErrorCode::Config, "no session files given");
    const auto exemplar = resolve_exemplar(config);
    auto setup = make_backend(config);  // fails fast, before any network call
    const auto sessions = load_corpus(config.session_paths);

    const auto network_before = network_call_count();
    const auto results = formalize_corpus(sessions, exemplar, *setup.backend, setup.request, setup.concurrency);
    const auto corpus = formalized_only(results);

    ArtifactWriter writer(config.out_dir);
    PipelineResult summary;
    summary.sessions = sessions.size();
    for (const auto& s : sessions) summary.prompts += s.prompts.size();
    summary.formalized = corpus.size();
    summary.unformalized = results.size() - corpus.size();

    writer.write("formalized.jsonl", to_jsonl(corpus));
    {
        std::string lines;
        for (const auto& r : results) {
            if (const auto* u = std::get_if<UnformalizedSession>(&r)) {
                ordered_json j = {{"session_id", u->session.session_id},
                                  {"code", std::string(to_string(u->code))},
                                  {"reason", u->reason}};
                lines += j.dump() + "\n";
            }
        }
        writer.write("unformalized.jsonl", lines);
    }
    writer.write("transitions.csv", transitions_csv(corpus));

    const auto tasks = task_ids(sessions);
    std::set<std::string> cohort_users;
    if (config.cohort == Cohort::FinishedAll) {
        const auto users = finished_all_users(sessions);
        cohort_users.insert(users.begin(), users.end());
    }
    std::vector<SummaryRow> summary_rows;
    std::vector<std::vector<TransitionRecord>> per_session;
    std::vector<ReductionFinding> reductions;
    for (const auto& fs : corpus) {
        per_session.push_back(classify_session(fs));
        auto found = analyze_reduction(fs, fs.session.success_flags());
        reductions.insert(reductions.end(), found.begin(), found.end());
    }
    for (const auto& task : tasks) {
        std::vector<TransitionRecord> cohort_transitions;
        for (const auto& fs : corpus) {
            if (fs.session.task_id != task) continue;
            if (config.cohort == Cohort::FinishedAll && !cohort_users.contains(fs.session.user_id)) continue;
            auto ts = classify_session(fs);
            cohort_transitions.insert(cohort_transitions.end(), ts.begin(), ts.end());
        }
        writer.write("heatmap_task_" + task + ".csv", heatmap_csv(heatmap(cohort_transitions)));
        writer.write("series_task_" + task + ".csv", series_csv(words_constraints_series(corpus, task)));
        const bool has_prompts = std::any_of(corpus.begin(), corpus.end(),
                                             [&](const FormalizedSession& fs) { return fs.session.task_id == task; });
        if (has_prompts) summary_rows.push_back(summarize_constraints(corpus, task));
    }
    writer.write("summary.csv", summary_csv(summary_rows));
    writer.write("correlation.csv", correlation_csv(per_session));
    writer.write("compare.csv", compare_csv(corpus, config.diff_mode));
    writer.write("reduction.csv", reduction_csv(reductions));
    writer.write("reduction_summary.csv", reduction_summary_csv(tabulate(reductions)));

    summary.backend_calls = setup.backend->call_count();
    summary.network_calls = network_call_count() - network_before;

    ordered_json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["backend_mode"] = std::string(to_string(config.mode));
    manifest["backend_id"] = setup.backend->id();
    manifest["model_id"] = setup.model_id;
    manifest["exemplar_sha256"] = sha256_hex(exemplar.render());
    manifest["seed"] = config.seed;
    manifest["diff_mode"] = std::string(to_string(config.diff_mode));
    manifest["cohort"] = std::string(to_string(config.cohort));
    manifest["churn_threshold"] = config.churn_threshold;
    manifest["counts"] = {{"sessions", summary.sessions},
                          {"prompts", summary.prompts},
                          {"formalized_sessions", summary.formalized},
                          {"unformalized_sessions", summary.unformalized},
                          {"backend_calls", summary.backend_calls},
                          {"network_calls", summary.network_calls}};
    manifest["metadata"] = {{"p_value_sidedness", "two-sided"},
                            {"quantiles", "linear interpolation between order statistics"},
                            {"std", "sample (n-1)"}};
    manifest["artifacts"] = ordered_json::object();
    for (const auto& name : writer.names()) {
        manifest["artifacts"][name] = sha256_hex(read_text(writer.dir() / (name + ".partial")));
    }
    writer.write("manifest.json", manifest.dump(2) + "\n");
    writer.commit();

    summary.artifacts = writer.names();
    return summary;
}

std::string error_report_json(const Error& e) {
    ordered_json j = {{"error",
                       {{"code", std::string(to_string(e.code()))},
                        {"category", category_of(e.code()) == ErrorCategory::Input     ? "input"
                                     : category_of(e.code()) == ErrorCategory::Backend ? "backend"
                                                                                       : "parse"},
                        {"message", e.what()},
                        {"detail", e.detail()},
                        {"exit_code", exit_code_for(e.code())}}}};
    return j.dump() + "\n";
}

// ---------------------------------------------------------------------------

std::size_t author_fixtures(const std::filesystem::path& manifest, FixtureStore& store,
                            const FewShotExemplar& exemplar, const RequestOptions& options) {
    const auto base = manifest.parent_path();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(manifest));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::MalformedInput, "malformed fixture manifest: " + std::string(e.what()), manifest.string());
    }
    std::vector<std::filesystem::path> paths;
    for (const auto& p : j.at("sessions")) paths.push_back(base / p.get<std::string>());
    const auto sessions = load_corpus(paths);
    std::map<std::string, const PromptSession*> by_id;
    for (const auto& s : sessions) by_id[s.session_id] = &s;

    std::size_t written = 0;
    for (const auto& entry : j.at("entries")) {
        const auto id = entry.at("session_id").get<std::string>();
        auto it = by_id.find(id);
        if (it == by_id.end()) throw Error(ErrorCode::MalformedInput, "fixture manifest names unknown session " + id, id);
        std::vector<std::string> texts;
        for (const auto& p : it->second->prompts) texts.push_back(p.text);
        for (const auto& s : entry.value("solutions", nlohmann::json::array())) texts.push_back(s.get<std::string>());

        const auto request = build_request(exemplar, texts, options);
        store.record(request, {read_text(base / entry.at("response").get<std::string>()), "authored", 0});
        ++written;
        if (entry.contains("retry_response")) {
            store.record(build_retry_request(request, texts.size()),
                         {read_text(base / entry.at("retry_response").get<std::string>()), "authored", 0});
            ++written;
        }
    }
    return written;
}

}  // namespace p2c
