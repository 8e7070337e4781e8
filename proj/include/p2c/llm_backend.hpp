#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>

namespace p2c {

inline constexpr const char* kDefaultModel = "gpt-4";
inline constexpr const char* kDefaultBaseUrl = "https://api.openai.com/v1";

struct CompletionRequest {
    std::string system_text;
    std::string user_text;
    std::string model_id = kDefaultModel;
    double temperature = 0.0;
    int max_output_tokens = 4096;

    /// Throws InvalidArgument when user_text is empty, temperature is outside
    /// [0, 2] or max_output_tokens is not positive.
    void validate() const;
};

struct CompletionResponse {
    std::string text;  // verbatim, untrimmed
    std::string backend_id;
    std::int64_t latency_ms = 0;
};

/// Lower-case hex SHA-256 of the compact JSON object
/// {"model_id":...,"system_text":...,"user_text":...} (keys sorted, UTF-8).
/// Sampling parameters are not part of the key.
std::string content_hash(const CompletionRequest& request);

/// Lower-case hex SHA-256 of arbitrary bytes.
std::string sha256_hex(std::string_view data);

/// Process-wide count of HTTP requests issued by live backends.
std::uint64_t network_call_count() noexcept;

class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
    virtual std::string id() const = 0;
    std::uint64_t call_count() const noexcept { return calls_.load(); }

protected:
    void count_call() noexcept { calls_.fetch_add(1); }

private:
    std::atomic<std::uint64_t> calls_{0};
};

/// Directory of `<content-hash>.json` files, each
/// `{"request": {...}, "response": {...}}`. Reads are concurrent; writes are
/// exclusive and last-write-wins.
class FixtureStore {
public:
    struct Entry {
        CompletionRequest request;
        CompletionResponse response;
    };

    explicit FixtureStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }
    std::optional<Entry> lookup(const std::string& hash) const;
    std::string record(const CompletionRequest& request, const CompletionResponse& response);
    std::size_t size() const;

private:
    std::filesystem::path dir_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, Entry> entries_;
};

/// Serves recorded responses by request content hash; never touches the network.
class ReplayBackend final : public Backend {
public:
    explicit ReplayBackend(std::shared_ptr<const FixtureStore> store) : store_(std::move(store)) {}

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string id() const override { return "replay"; }

private:
    std::shared_ptr<const FixtureStore> store_;
};

/// Forwards to an inner backend and records every exchange into a store.
class RecordingBackend final : public Backend {
public:
    RecordingBackend(std::shared_ptr<Backend> inner, std::shared_ptr<FixtureStore> store)
        : inner_(std::move(inner)), store_(std::move(store)) {}

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string id() const override { return "record:" + inner_->id(); }

private:
    std::shared_ptr<Backend> inner_;
    std::shared_ptr<FixtureStore> store_;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_delay{1000};
    double multiplier = 2.0;

    std::chrono::milliseconds delay_for(int retry) const;  // retry is 1-based
};

struct LiveConfig {
    std::string base_url = kDefaultBaseUrl;
    std::string model = kDefaultModel;
    std::string api_key;
    double temperature = 0.0;
    int max_output_tokens = 4096;
    int concurrency = 4;
    std::string fixture_dir;
    std::chrono::seconds timeout{120};
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the JSON config (keys base_url, model, temperature,
/// max_output_tokens, concurrency, fixture_dir) if a path is given, then
/// applies P2C_API_KEY / P2C_BASE_URL / P2C_MODEL from the environment.
LiveConfig load_live_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env = {});

class LiveBackend final : public Backend {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    /// Throws Config if no credential is configured.
    explicit LiveBackend(LiveConfig config, RetryPolicy retry = {}, Sleeper sleeper = {});

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string id() const override { return "live:" + config_.model; }

private:
    CompletionResponse attempt(const CompletionRequest& request);

    LiveConfig config_;
    RetryPolicy retry_;
    Sleeper sleeper_;
    std::string origin_;
    std::string path_prefix_;

    std::mutex gate_mutex_;
    std::condition_variable gate_cv_;
    int in_flight_ = 0;
};

}  // namespace p2c
