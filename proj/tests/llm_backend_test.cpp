#include "p2c/error.hpp"
#include "p2c/llm_backend.hpp"

#include "test_support.hpp"

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <thread>

using namespace p2c;
using namespace p2c::testing;
using namespace std::chrono_literals;

namespace {

CompletionRequest sample_request(const std::string& user = "P1 count zeros\nformalization:") {
    CompletionRequest r;
    r.system_text = "system";
    r.user_text = user;
    return r;
}

std::string completion_body(const std::string& content) {
    return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

EnvLookup env_of(std::map<std::string, std::string> vars) {
    return [vars = std::move(vars)](const std::string& name) -> std::optional<std::string> {
        auto it = vars.find(name);
        if (it == vars.end()) return std::nullopt;
        return it->second;
    };
}

/// In-process HTTP stub on an ephemeral port.
class StubServer {
public:
    explicit StubServer(httplib::Server::Handler handler) {
        server_.Post("/v1/chat/completions", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }
    LiveConfig config() const {
        LiveConfig c;
        c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
        c.api_key = "test-key";
        c.timeout = 1s;
        return c;
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

struct SleepLog {
    std::vector<std::chrono::milliseconds> delays;
    LiveBackend::Sleeper sleeper() {
        return [this](std::chrono::milliseconds d) { delays.push_back(d); };
    }
};

ErrorCode code_of(Backend& backend, const CompletionRequest& req) {
    try {
        backend.complete(req);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::Io;
}

}  // namespace

TEST_CASE("sha256_hex matches the standard test vector") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("content hash covers model, system and user text only") {
    auto r = sample_request();
    const auto expected = sha256_hex(
        nlohmann::json{{"user_text", r.user_text}, {"system_text", r.system_text}, {"model_id", r.model_id}}.dump());
    CHECK(content_hash(r) == expected);

    auto warmer = r;
    warmer.temperature = 1.0;
    warmer.max_output_tokens = 10;
    CHECK(content_hash(warmer) == content_hash(r));

    auto other = r;
    other.model_id = "other";
    CHECK(content_hash(other) != content_hash(r));
    other = r;
    other.user_text += " ";
    CHECK(content_hash(other) != content_hash(r));
}

TEST_CASE("request validation") {
    auto r = sample_request();
    CHECK_NOTHROW(r.validate());
    r.user_text.clear();
    CHECK_THROWS_AS(r.validate(), Error);
    r = sample_request();
    r.temperature = 2.5;
    CHECK_THROWS_AS(r.validate(), Error);
    r = sample_request();
    r.max_output_tokens = 0;
    CHECK_THROWS_AS(r.validate(), Error);
}

TEST_CASE("fixture store persists, replays and keeps the last write") {
    const auto dir = temp_dir("store");
    const auto req = sample_request();
    {
        FixtureStore store(dir);
        CHECK(store.size() == 0);
        const auto hash = store.record(req, {"first", "authored", 0});
        CHECK(hash == content_hash(req));
        store.record(req, {"second", "authored", 0});
        CHECK(store.size() == 1);
    }
    auto store = std::make_shared<const FixtureStore>(dir);
    CHECK(store->size() == 1);
    CHECK(std::filesystem::exists(dir / (content_hash(req) + ".json")));
    ReplayBackend replay(store);
    const auto res = replay.complete(req);
    CHECK(res.text == "second");
    CHECK(res.backend_id == "replay");
    CHECK(replay.call_count() == 1);

    try {
        replay.complete(sample_request("something else"));
        FAIL("expected MissingFixture");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingFixture);
        CHECK(e.detail() == content_hash(sample_request("something else")));
        CHECK(exit_code_for(e.code()) == 2);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("replay never touches the network") {
    const auto before = network_call_count();
    auto replay = shipped_replay();
    const auto sessions = shipped_sessions();
    for (const auto& s : sessions) {
        if (s.session_id == "t3-u06") continue;
        CHECK_NOTHROW(formalize_session(s, FewShotExemplar::builtin(), *replay));
    }
    CHECK(network_call_count() == before);
}

TEST_CASE("config file and environment") {
    const auto dir = temp_dir("config");
    const auto path = dir / "config.json";
    std::ofstream(path) << R"({"base_url":"http://x:1/v1","model":"m1","temperature":0.3,"max_output_tokens":77,)"
                           R"("concurrency":2,"fixture_dir":"fx"})";
    auto c = load_live_config(path, env_of({}));
    CHECK(c.base_url == "http://x:1/v1");
    CHECK(c.model == "m1");
    CHECK(c.temperature == doctest::Approx(0.3));
    CHECK(c.max_output_tokens == 77);
    CHECK(c.concurrency == 2);
    CHECK(c.fixture_dir == "fx");
    CHECK(c.api_key.empty());

    c = load_live_config(path, env_of({{"P2C_API_KEY", "k"}, {"P2C_BASE_URL", "http://y/v2"}, {"P2C_MODEL", "m2"}}));
    CHECK(c.api_key == "k");
    CHECK(c.base_url == "http://y/v2");
    CHECK(c.model == "m2");

    std::ofstream(dir / "bad.json") << "{";
    CHECK_THROWS_AS(load_live_config(dir / "bad.json", env_of({})), Error);
    std::ofstream(dir / "wrong.json") << R"({"concurrency":"many"})";
    CHECK_THROWS_AS(load_live_config(dir / "wrong.json", env_of({})), Error);

    auto defaults = load_live_config(std::nullopt, env_of({}));
    CHECK(defaults.model == kDefaultModel);
    CHECK(defaults.temperature == 0.0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("live backend refuses to start without a credential") {
    LiveConfig c;
    try {
        LiveBackend backend(c);
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Config);
        CHECK(exit_code_for(e.code()) == 1);
    }
}

TEST_CASE("retry delays double from one second") {
    RetryPolicy p;
    CHECK(p.max_retries == 3);
    CHECK(p.delay_for(1) == 1000ms);
    CHECK(p.delay_for(2) == 2000ms);
    CHECK(p.delay_for(3) == 4000ms);
}

TEST_CASE("live backend against a local stub") {
    SUBCASE("success sends the chat payload with bearer auth") {
        nlohmann::json seen;
        std::string auth;
        StubServer server([&](const httplib::Request& req, httplib::Response& res) {
            seen = nlohmann::json::parse(req.body);
            auth = req.get_header_value("Authorization");
            res.set_content(completion_body("Formalization of P1: ..."), "application/json");
        });
        LiveBackend backend(server.config());
        const auto before = network_call_count();
        const auto res = backend.complete(sample_request());
        CHECK(res.text == "Formalization of P1: ...");
        CHECK(res.backend_id == "live:gpt-4");
        CHECK(auth == "Bearer test-key");
        CHECK(seen["model"] == "gpt-4");
        CHECK(seen["temperature"] == 0.0);
        CHECK(seen["messages"][0]["role"] == "system");
        CHECK(seen["messages"][1]["content"] == sample_request().user_text);
        CHECK(network_call_count() == before + 1);
    }
    SUBCASE("authentication failures are not retried") {
        std::atomic<int> hits{0};
        StubServer server([&](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.status = 401;
        });
        SleepLog log;
        LiveBackend backend(server.config(), {}, log.sleeper());
        CHECK(code_of(backend, sample_request()) == ErrorCode::Authentication);
        CHECK(hits == 1);
        CHECK(log.delays.empty());
    }
    SUBCASE("rate limiting retries with backoff, then gives up") {
        std::atomic<int> hits{0};
        StubServer server([&](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.status = 429;
        });
        SleepLog log;
        LiveBackend backend(server.config(), {}, log.sleeper());
        CHECK(code_of(backend, sample_request()) == ErrorCode::RateLimited);
        CHECK(hits == 4);
        CHECK(log.delays == std::vector<std::chrono::milliseconds>{1000ms, 2000ms, 4000ms});
    }
    SUBCASE("a transient failure followed by success") {
        std::atomic<int> hits{0};
        StubServer server([&](const httplib::Request&, httplib::Response& res) {
            if (++hits == 1) {
                res.status = 504;
                return;
            }
            res.set_content(completion_body("ok"), "application/json");
        });
        SleepLog log;
        LiveBackend backend(server.config(), {}, log.sleeper());
        CHECK(backend.complete(sample_request()).text == "ok");
        CHECK(hits == 2);
        CHECK(log.delays.size() == 1);
    }
    SUBCASE("other HTTP errors and bad bodies fail without retry") {
        std::atomic<int> hits{0};
        StubServer server([&](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            if (req.body.find("bad-body") != std::string::npos) {
                res.set_content("{}", "application/json");
            } else {
                res.status = 500;
            }
        });
        SleepLog log;
        LiveBackend backend(server.config(), {}, log.sleeper());
        CHECK(code_of(backend, sample_request()) == ErrorCode::HttpStatus);
        CHECK(code_of(backend, sample_request("bad-body")) == ErrorCode::HttpStatus);
        CHECK(hits == 2);
        CHECK(log.delays.empty());
    }
    SUBCASE("a slow server times out and is retried") {
        std::atomic<int> hits{0};
        StubServer server([&](const httplib::Request&, httplib::Response& res) {
            ++hits;
            std::this_thread::sleep_for(1500ms);
            res.set_content(completion_body("late"), "application/json");
        });
        SleepLog log;
        RetryPolicy one_retry;
        one_retry.max_retries = 1;
        LiveBackend backend(server.config(), one_retry, log.sleeper());
        CHECK(code_of(backend, sample_request()) == ErrorCode::Timeout);
        CHECK(log.delays.size() == 1);
    }
    SUBCASE("in-flight requests never exceed the configured concurrency") {
        std::atomic<int> current{0}, peak{0};
        StubServer server([&](const httplib::Request&, httplib::Response& res) {
            const int now = ++current;
            int seen = peak.load();
            while (now > seen && !peak.compare_exchange_weak(seen, now)) {
            }
            std::this_thread::sleep_for(50ms);
            --current;
            res.set_content(completion_body("ok"), "application/json");
        });
        auto config = server.config();
        config.concurrency = 2;
        LiveBackend backend(config);
        std::vector<std::thread> callers;
        for (int i = 0; i < 6; ++i) callers.emplace_back([&] { backend.complete(sample_request()); });
        for (auto& t : callers) t.join();
        CHECK(peak.load() <= 2);
        CHECK(backend.call_count() == 6);
    }
}

TEST_CASE("connection failures are network errors") {
    LiveConfig c;
    c.base_url = "http://127.0.0.1:1/v1";
    c.api_key = "k";
    c.timeout = 1s;
    SleepLog log;
    LiveBackend backend(c, {}, log.sleeper());
    const auto code = code_of(backend, sample_request());
    CHECK((code == ErrorCode::Network || code == ErrorCode::Timeout));
    CHECK(exit_code_for(code) == 2);
}

TEST_CASE("record then replay reproduces the live exchange offline") {
    StubServer server([&](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        res.set_content(completion_body("echo:" + body["messages"][1]["content"].get<std::string>()), "application/json");
    });
    const auto dir = temp_dir("record");
    auto store = std::make_shared<FixtureStore>(dir);
    RecordingBackend recorder(std::make_shared<LiveBackend>(server.config()), store);
    CHECK(recorder.id() == "record:live:gpt-4");
    const auto live = recorder.complete(sample_request("hello"));
    CHECK(live.text == "echo:hello");

    const auto before = network_call_count();
    ReplayBackend replay(std::make_shared<const FixtureStore>(dir));
    CHECK(replay.complete(sample_request("hello")).text == live.text);
    CHECK(network_call_count() == before);
    std::filesystem::remove_all(dir);
}
