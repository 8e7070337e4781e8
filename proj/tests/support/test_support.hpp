#pragma once

#include "p2c/error.hpp"
#include "p2c/formalizer.hpp"
#include "p2c/llm_backend.hpp"
#include "p2c/logic.hpp"
#include "p2c/reports.hpp"
#include "p2c/session.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace p2c::testing {

inline std::filesystem::path fixture_path(const std::string& relative) {
    return std::filesystem::path(P2C_FIXTURE_DIR) / relative;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("p2c-test-" + name + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::vector<PromptSession> shipped_sessions() {
    return load_sessions(fixture_path("corpus/sessions.jsonl"));
}

inline const PromptSession& find_session(const std::vector<PromptSession>& sessions, const std::string& id) {
    auto it = std::find_if(sessions.begin(), sessions.end(), [&](const PromptSession& s) { return s.session_id == id; });
    if (it == sessions.end()) throw std::runtime_error("no fixture session " + id);
    return *it;
}

/// Replay backend over the committed store.
inline std::shared_ptr<ReplayBackend> shipped_replay() {
    return std::make_shared<ReplayBackend>(std::make_shared<const FixtureStore>(fixture_path("replay")));
}

inline std::vector<FormalizedSession> shipped_corpus() {
    auto backend = shipped_replay();
    return formalized_only(formalize_corpus(shipped_sessions(), FewShotExemplar::builtin(), *backend, {}, 1));
}

/// Prompt texts carried by a request built by build_request.
inline std::vector<std::string> request_prompts(const std::string& user_text) {
    const auto start = user_text.rfind("\nprompts\n");
    std::vector<std::string> out;
    if (start == std::string::npos) return out;
    std::istringstream in(user_text.substr(start + 9));
    std::string line;
    static const std::regex prompt_re(R"(^P([0-9]+) (.*)$)");
    while (std::getline(in, line)) {
        std::smatch m;
        if (std::regex_match(line, m, prompt_re)) out.push_back(m[2].str());
    }
    return out;
}

/// Deterministic stand-in model: every token "kN" in a prompt becomes
/// constraint CN, so identical prompts always get identical constraints.
class KeywordBackend final : public Backend {
public:
    CompletionResponse complete(const CompletionRequest& request) override {
        count_call();
        static const std::regex key_re(R"(\bk([0-9]+)\b)");
        std::string out;
        const auto prompts = request_prompts(request.user_text);
        for (std::size_t i = 0; i < prompts.size(); ++i) {
            out += "Formalization of P" + std::to_string(i + 1) + ":\n";
            std::set<int> keys;
            for (auto it = std::sregex_iterator(prompts[i].begin(), prompts[i].end(), key_re);
                 it != std::sregex_iterator(); ++it) {
                keys.insert(std::stoi((*it)[1].str()));
            }
            std::string expr;
            for (int k : keys) {
                out += "C" + std::to_string(k) + ": keyword number " + std::to_string(k) + "\n";
                if (!expr.empty()) expr += " ∧ ";
                expr += "C" + std::to_string(k);
            }
            out += "We can formalize P" + std::to_string(i + 1) + " as: P" + std::to_string(i + 1) + " → (" + expr +
                   ")\n";
        }
        return {out, "keyword", 0};
    }
    std::string id() const override { return "keyword"; }
};

/// Returns canned replies in order and remembers every request.
class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}

    CompletionResponse complete(const CompletionRequest& request) override {
        count_call();
        requests.push_back(request);
        if (next_ >= replies_.size()) throw Error(ErrorCode::MissingFixture, "script exhausted");
        return {replies_[next_++], "scripted", 0};
    }
    std::string id() const override { return "scripted"; }

    std::vector<CompletionRequest> requests;

private:
    std::vector<std::string> replies_;
    std::size_t next_ = 0;
};

/// Independent symmetric-difference oracle with the refinement rule spelled
/// out element by element.
inline std::size_t oracle_diff(const AtomSet& from, const AtomSet& to, const RefinementSet& links = {}) {
    std::vector<std::string> removed, added;
    for (const auto& a : from) {
        if (!to.contains(a)) removed.push_back(a);
    }
    for (const auto& a : to) {
        if (!from.contains(a)) added.push_back(a);
    }
    std::size_t pairs = 0;
    std::set<std::string> used_removed, used_added;
    for (const auto& [o, n] : links) {
        const bool o_removed = std::find(removed.begin(), removed.end(), o) != removed.end();
        const bool n_added = std::find(added.begin(), added.end(), n) != added.end();
        if (o_removed && n_added && !used_removed.contains(o) && !used_added.contains(n)) {
            used_removed.insert(o);
            used_added.insert(n);
            ++pairs;
        }
    }
    return removed.size() + added.size() - pairs;
}

inline AtomSet atoms(std::initializer_list<const char*> labels) {
    AtomSet s;
    for (const auto* l : labels) s.insert(l);
    return s;
}

}  // namespace p2c::testing
