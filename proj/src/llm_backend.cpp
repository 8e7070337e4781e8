#include "p2c/llm_backend.hpp"

#include "p2c/error.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace p2c {

namespace {

using json = nlohmann::json;

std::atomic<std::uint64_t> g_network_calls{0};

json request_to_json(const CompletionRequest& r) {
    return {{"system_text", r.system_text},
            {"user_text", r.user_text},
            {"model_id", r.model_id},
            {"temperature", r.temperature},
            {"max_output_tokens", r.max_output_tokens}};
}

CompletionRequest request_from_json(const json& j) {
    CompletionRequest r;
    r.system_text = j.at("system_text").get<std::string>();
    r.user_text = j.at("user_text").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    r.temperature = j.value("temperature", 0.0);
    r.max_output_tokens = j.value("max_output_tokens", 4096);
    return r;
}

json response_to_json(const CompletionResponse& r) {
    return {{"text", r.text}, {"backend_id", r.backend_id}, {"latency_ms", r.latency_ms}};
}

CompletionResponse response_from_json(const json& j) {
    CompletionResponse r;
    r.text = j.at("text").get<std::string>();
    r.backend_id = j.value("backend_id", std::string{});
    r.latency_ms = j.value("latency_ms", std::int64_t{0});
    return r;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read '" + path.string() + "'", path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool is_hex_digest(const std::string& s) {
    return s.size() == 64 && s.find_first_not_of("0123456789abcdef") == std::string::npos;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::Io, "SHA-256 computation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0x0F]);
    }
    return out;
}

void CompletionRequest::validate() const {
    if (user_text.empty()) throw Error(ErrorCode::InvalidArgument, "completion request has empty user_text");
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
        throw Error(ErrorCode::InvalidArgument, "temperature must be in [0, 2]");
    }
    if (max_output_tokens <= 0) throw Error(ErrorCode::InvalidArgument, "max_output_tokens must be positive");
}

std::string content_hash(const CompletionRequest& request) {
    const json key = {{"model_id", request.model_id},
                      {"system_text", request.system_text},
                      {"user_text", request.user_text}};
    return sha256_hex(key.dump(-1, ' ', false, json::error_handler_t::strict));
}

std::uint64_t network_call_count() noexcept { return g_network_calls.load(); }

// ---------------------------------------------------------------------------

FixtureStore::FixtureStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    if (!std::filesystem::exists(dir_, ec)) return;
    if (!std::filesystem::is_directory(dir_, ec)) {
        throw Error(ErrorCode::Config, "fixture path '" + dir_.string() + "' is not a directory", dir_.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        const auto stem = entry.path().stem().string();
        if (!is_hex_digest(stem)) continue;
        try {
            const auto j = json::parse(read_file(entry.path()));
            entries_[stem] = Entry{request_from_json(j.at("request")), response_from_json(j.at("response"))};
        } catch (const json::exception& e) {
            throw Error(ErrorCode::MalformedInput,
                        "malformed fixture '" + entry.path().string() + "': " + e.what(), entry.path().string());
        }
    }
}

std::optional<FixtureStore::Entry> FixtureStore::lookup(const std::string& hash) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(hash);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::string FixtureStore::record(const CompletionRequest& request, const CompletionResponse& response) {
    const auto key = content_hash(request);
    const json doc = {{"request", request_to_json(request)}, {"response", response_to_json(response)}};

    std::unique_lock lock(mutex_);
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    const auto path = dir_ / (key + ".json");
    const auto tmp = dir_ / (key + ".json.partial");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write fixture '" + tmp.string() + "'", tmp.string());
        out << doc.dump(2) << '\n';
        if (!out) throw Error(ErrorCode::Io, "cannot write fixture '" + tmp.string() + "'", tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot finalize fixture '" + path.string() + "': " + ec.message(), path.string());

    auto [it, inserted] = entries_.insert_or_assign(key, Entry{request, response});
    if (!inserted) spdlog::warn("fixture {} overwritten (last write wins)", key);
    return key;
}

std::size_t FixtureStore::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

// ---------------------------------------------------------------------------

CompletionResponse ReplayBackend::complete(const CompletionRequest& request) {
    count_call();
    request.validate();
    const auto key = content_hash(request);
    auto entry = store_->lookup(key);
    if (!entry) {
        throw Error(ErrorCode::MissingFixture, "no recorded fixture for request hash " + key, key);
    }
    return CompletionResponse{entry->response.text, id(), 0};
}

CompletionResponse RecordingBackend::complete(const CompletionRequest& request) {
    count_call();
    auto response = inner_->complete(request);
    store_->record(request, response);
    return response;
}

// ---------------------------------------------------------------------------

std::chrono::milliseconds RetryPolicy::delay_for(int retry) const {
    const double factor = std::pow(multiplier, retry - 1);
    return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(initial_delay.count() * factor)));
}

LiveConfig load_live_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env) {
    LiveConfig config;
    if (path) {
        json j;
        try {
            j = json::parse(read_file(*path));
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::Config, "malformed config '" + path->string() + "': " + e.what(), path->string());
        }
        try {
            config.base_url = j.value("base_url", config.base_url);
            config.model = j.value("model", config.model);
            config.temperature = j.value("temperature", config.temperature);
            config.max_output_tokens = j.value("max_output_tokens", config.max_output_tokens);
            config.concurrency = j.value("concurrency", config.concurrency);
            config.fixture_dir = j.value("fixture_dir", config.fixture_dir);
        } catch (const json::type_error& e) {
            throw Error(ErrorCode::Config, "invalid config '" + path->string() + "': " + e.what(), path->string());
        }
    }
    const EnvLookup lookup = env ? env : [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str()); v != nullptr && *v != '\0') return std::string(v);
        return std::nullopt;
    };
    if (auto v = lookup("P2C_API_KEY")) config.api_key = *v;
    if (auto v = lookup("P2C_BASE_URL")) config.base_url = *v;
    if (auto v = lookup("P2C_MODEL")) config.model = *v;
    if (config.concurrency < 1) throw Error(ErrorCode::Config, "concurrency must be at least 1");
    return config;
}

LiveBackend::LiveBackend(LiveConfig config, RetryPolicy retry, Sleeper sleeper)
    : config_(std::move(config)), retry_(retry), sleeper_(std::move(sleeper)) {
    if (config_.api_key.empty()) {
        throw Error(ErrorCode::Config, "live backend requires a credential (set P2C_API_KEY)", "P2C_API_KEY");
    }
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };

    const auto scheme_end = config_.base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::Config, "base_url must include a scheme: '" + config_.base_url + "'", "base_url");
    }
    const auto path_start = config_.base_url.find('/', scheme_end + 3);
    origin_ = config_.base_url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    if (config_.concurrency < 1) config_.concurrency = 1;
}

CompletionResponse LiveBackend::complete(const CompletionRequest& request) {
    count_call();
    request.validate();

    {
        std::unique_lock lock(gate_mutex_);
        gate_cv_.wait(lock, [&] { return in_flight_ < config_.concurrency; });
        ++in_flight_;
    }
    struct Release {
        LiveBackend* self;
        ~Release() {
            {
                std::lock_guard lock(self->gate_mutex_);
                --self->in_flight_;
            }
            self->gate_cv_.notify_one();
        }
    } release{this};

    for (int retry = 0;; ++retry) {
        try {
            return attempt(request);
        } catch (const Error& e) {
            const bool transient = e.code() == ErrorCode::Timeout || e.code() == ErrorCode::RateLimited;
            if (!transient || retry >= retry_.max_retries) throw;
            const auto delay = retry_.delay_for(retry + 1);
            spdlog::warn("transient {} from {}; retry {}/{} in {} ms", to_string(e.code()), origin_, retry + 1,
                         retry_.max_retries, delay.count());
            sleeper_(delay);
        }
    }
}

CompletionResponse LiveBackend::attempt(const CompletionRequest& request) {
    httplib::Client client(origin_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    client.set_bearer_token_auth(config_.api_key);

    json body = {{"model", request.model_id},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_output_tokens},
                 {"messages", json::array()}};
    if (!request.system_text.empty()) {
        body["messages"].push_back({{"role", "system"}, {"content", request.system_text}});
    }
    body["messages"].push_back({{"role", "user"}, {"content", request.user_text}});

    const auto started = std::chrono::steady_clock::now();
    g_network_calls.fetch_add(1);
    auto res = client.Post(path_prefix_ + "/chat/completions", body.dump(), "application/json");
    const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
            throw Error(ErrorCode::Timeout, "request to " + origin_ + " timed out: " + httplib::to_string(err));
        }
        throw Error(ErrorCode::Network, "request to " + origin_ + " failed: " + httplib::to_string(err));
    }
    const int status = res->status;
    if (status == 401 || status == 403) {
        throw Error(ErrorCode::Authentication, "authentication rejected by " + origin_ + " (HTTP " +
                                                   std::to_string(status) + ")", std::to_string(status));
    }
    if (status == 429) throw Error(ErrorCode::RateLimited, "rate limited by " + origin_, "429");
    if (status == 408 || status == 504) {
        throw Error(ErrorCode::Timeout, "gateway timeout from " + origin_, std::to_string(status));
    }
    if (status < 200 || status >= 300) {
        throw Error(ErrorCode::HttpStatus, "HTTP " + std::to_string(status) + " from " + origin_ + ": " + res->body,
                    std::to_string(status));
    }

    try {
        const auto j = json::parse(res->body);
        return CompletionResponse{j.at("choices").at(0).at("message").at("content").get<std::string>(), id(),
                                  latency.count()};
    } catch (const json::exception& e) {
        throw Error(ErrorCode::HttpStatus, "unexpected response body from " + origin_ + ": " + e.what(),
                    std::to_string(status));
    }
}

}  // namespace p2c
