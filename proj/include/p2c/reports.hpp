#pragma once

#include "p2c/evolution.hpp"
#include "p2c/formalizer.hpp"
#include "p2c/llm_backend.hpp"
#include "p2c/progress.hpp"
#include "p2c/session.hpp"
#include "p2c/stats.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace p2c {

inline constexpr const char* kToolVersion = "0.3.0";

enum class BackendMode { Live, Replay, Record };
enum class Cohort { All, FinishedAll };

std::string_view to_string(BackendMode m);
std::string_view to_string(Cohort c);
std::string_view to_string(DiffMode m);
BackendMode parse_backend_mode(std::string_view s);
Cohort parse_cohort(std::string_view s);
DiffMode parse_diff_mode(std::string_view s);

struct RunConfig {
    BackendMode mode = BackendMode::Replay;
    std::optional<std::filesystem::path> config_path;
    std::optional<std::filesystem::path> exemplar_path;
    std::vector<std::filesystem::path> session_paths;
    std::filesystem::path out_dir = "p2c-out";
    std::optional<std::filesystem::path> fixture_dir;  // overrides the config file
    Cohort cohort = Cohort::FinishedAll;
    DiffMode diff_mode = DiffMode::Linked;
    std::size_t churn_threshold = kDefaultChurnThreshold;
    std::optional<int> concurrency;  // overrides the config file
    std::uint64_t seed = 20250101;
    EnvLookup env;  // defaults to the process environment
};

/// Backend plus the settings it was resolved from. Validates mode
/// requirements before any network traffic: live and record need a
/// credential, replay and record need a fixture directory.
struct BackendSetup {
    std::shared_ptr<Backend> backend;
    RequestOptions request;
    int concurrency = 1;
    std::string model_id;
};

BackendSetup make_backend(const RunConfig& config);

FewShotExemplar resolve_exemplar(const RunConfig& config);

std::vector<PromptSession> load_corpus(const std::vector<std::filesystem::path>& paths);

/// Formalizes sessions on up to `concurrency` workers; results keep input order.
std::vector<FormalizeResult> formalize_corpus(const std::vector<PromptSession>& sessions,
                                              const FewShotExemplar& exemplar, Backend& backend,
                                              const RequestOptions& options, int concurrency);

std::vector<FormalizedSession> formalized_only(const std::vector<FormalizeResult>& results);

/// User ids with a successful session in every task present in the corpus.
std::vector<std::string> finished_all_users(const std::vector<PromptSession>& sessions);

// --- CSV / JSON emitters -----------------------------------------------------

std::string transitions_csv(const std::vector<FormalizedSession>& corpus);
std::string heatmap_csv(const Heatmap& h);
std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string correlation_csv(const std::vector<std::vector<TransitionRecord>>& per_session_transitions);
std::string compare_csv(const std::vector<FormalizedSession>& corpus, DiffMode mode);
std::string series_csv(const std::vector<SeriesRow>& rows);
std::string reduction_csv(const std::vector<ReductionFinding>& findings);
std::string reduction_summary_csv(const ReductionTable& table);
std::string samplesize_csv(std::size_t population, double confidence, double margin);
std::string progress_json(const ProgressResult& result, std::size_t churn_threshold, DiffMode mode);
std::string radar_csv(const ProgressResult& result);

std::vector<std::string> task_ids(const std::vector<PromptSession>& sessions);

struct ReviewItem {
    std::string session_id;
    std::size_t index = 0;
    std::string text;
    AtomSet atoms;
};

/// Uniform sample without replacement of required_sample_size(N, confidence,
/// margin) prompts, N being all prompts of the formalized corpus. Seeded and
/// returned in corpus order.
std::vector<ReviewItem> sample_for_review(const std::vector<FormalizedSession>& corpus, double confidence,
                                          double margin, std::uint64_t seed);
std::string review_csv(const std::vector<ReviewItem>& items, const std::vector<FormalizedSession>& corpus);

// --- pipeline ------------------------------------------------------------------

/// Writes files as `<name>.partial` and renames them all only once every
/// artifact has been produced.
class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path dir);

    void write(const std::string& name, std::string_view content);
    /// Renames every pending artifact to its final name.
    void commit();

    const std::vector<std::string>& names() const { return names_; }
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> names_;
};

struct PipelineResult {
    std::size_t sessions = 0;
    std::size_t prompts = 0;
    std::size_t formalized = 0;
    std::size_t unformalized = 0;
    std::uint64_t backend_calls = 0;
    std::uint64_t network_calls = 0;
    std::vector<std::string> artifacts;
};

/// Ingestion, formalization, classification and statistics, written to
/// config.out_dir together with manifest.json. Throws p2c::Error; on failure
/// any written artifacts keep their `.partial` suffix.
PipelineResult run_pipeline(const RunConfig& config);

/// Machine-readable error document for a failed run.
std::string error_report_json(const Error& e);

// --- fixture authoring ---------------------------------------------------------

/// Records hand-written responses into `store`. The manifest lists session
/// files and entries `{"session_id", "response", "solutions"?, "retry_response"?}`
/// with paths relative to the manifest. Returns the number of fixtures written.
std::size_t author_fixtures(const std::filesystem::path& manifest, FixtureStore& store,
                            const FewShotExemplar& exemplar, const RequestOptions& options = {});

}  // namespace p2c
