#include "p2c/session.hpp"

#include "p2c/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace p2c {

namespace {

using json = nlohmann::json;

bool is_unicode_space(char32_t cp) {
    switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
        return true;
    default:
        return cp >= 0x2000 && cp <= 0x200A;
    }
}

// Length of the whitespace code point starting at text[pos], or 0 if the
// character there is not whitespace. Invalid UTF-8 counts as non-space.
std::size_t space_length_at(std::string_view text, std::size_t pos) {
    const auto b0 = static_cast<unsigned char>(text[pos]);
    if (b0 < 0x80) return is_unicode_space(b0) ? 1 : 0;
    std::size_t len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
    else return 0;
    if (pos + len > text.size()) return 0;
    for (std::size_t i = 1; i < len; ++i) {
        const auto b = static_cast<unsigned char>(text[pos + i]);
        if ((b & 0xC0) != 0x80) return 0;
        cp = (cp << 6) | (b & 0x3F);
    }
    return is_unicode_space(cp) ? len : 0;
}

template <typename Fn>
void for_each_word(std::string_view text, Fn&& fn) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size()) {
            const auto n = space_length_at(text, pos);
            if (n == 0) break;
            pos += n;
        }
        if (pos >= text.size()) break;
        const auto start = pos;
        while (pos < text.size() && space_length_at(text, pos) == 0) ++pos;
        fn(text.substr(start, pos - start));
    }
}

struct RawRecord {
    std::size_t line = 0;
    std::string user_id;
    std::string task_id;
    std::size_t index = 0;
    std::string text;
    std::optional<Outcome> outcome;
    std::optional<bool> success;
};

std::string required_string(const json& obj, const char* field, std::size_t line, std::string_view source) {
    auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) {
        throw Error(ErrorCode::MissingField,
                    std::string(source) + ":" + std::to_string(line) + ": missing required field '" + field + "'",
                    field);
    }
    if (!it->is_string()) {
        throw Error(ErrorCode::MalformedInput,
                    std::string(source) + ":" + std::to_string(line) + ": field '" + field + "' must be a string",
                    field);
    }
    return it->get<std::string>();
}

}  // namespace

std::string_view to_string(Outcome outcome) {
    switch (outcome) {
    case Outcome::Success: return "success";
    case Outcome::Failure: return "failure";
    case Outcome::Unknown: return "unknown";
    }
    return "unknown";
}

Outcome parse_outcome(std::string_view text) {
    if (text == "success") return Outcome::Success;
    if (text == "failure") return Outcome::Failure;
    if (text == "unknown") return Outcome::Unknown;
    throw Error(ErrorCode::MalformedInput, "invalid outcome '" + std::string(text) + "'", "outcome");
}

std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for_each_word(text, [&](std::string_view word) {
        if (!out.empty()) out.push_back(' ');
        out.append(word);
    });
    return out;
}

std::size_t count_words(std::string_view text) {
    std::size_t n = 0;
    for_each_word(text, [&](std::string_view) { ++n; });
    return n;
}

PromptRecord PromptRecord::make(std::size_t index, std::string text, std::optional<bool> success) {
    PromptRecord r;
    r.index = index;
    r.word_count = count_words(text);
    r.text = std::move(text);
    r.success = success;
    return r;
}

std::vector<bool> PromptSession::success_flags() const {
    std::vector<bool> flags(prompts.size(), false);
    const bool any_explicit = std::any_of(prompts.begin(), prompts.end(),
                                          [](const PromptRecord& p) { return p.success.has_value(); });
    if (any_explicit) {
        for (std::size_t i = 0; i < prompts.size(); ++i) flags[i] = prompts[i].success.value_or(false);
    } else if (outcome == Outcome::Success && !flags.empty()) {
        flags.back() = true;
    }
    return flags;
}

std::vector<PromptSession> parse_sessions(std::string_view jsonl, std::string_view source_name) {
    std::map<std::string, std::vector<RawRecord>> groups;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < jsonl.size()) {
        auto end = jsonl.find('\n', pos);
        if (end == std::string_view::npos) end = jsonl.size();
        auto line = jsonl.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (normalize_text(line).empty()) continue;

        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::MalformedInput,
                        std::string(source_name) + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what(),
                        std::to_string(line_no));
        }
        if (!obj.is_object()) {
            throw Error(ErrorCode::MalformedInput,
                        std::string(source_name) + ":" + std::to_string(line_no) + ": expected a JSON object",
                        std::to_string(line_no));
        }

        RawRecord rec;
        rec.line = line_no;
        const auto session_id = required_string(obj, "session_id", line_no, source_name);
        rec.user_id = required_string(obj, "user_id", line_no, source_name);
        rec.task_id = required_string(obj, "task_id", line_no, source_name);
        rec.text = required_string(obj, "text", line_no, source_name);

        auto idx = obj.find("index");
        if (idx == obj.end() || idx->is_null()) {
            throw Error(ErrorCode::MissingField,
                        std::string(source_name) + ":" + std::to_string(line_no) + ": missing required field 'index'",
                        "index");
        }
        if (!idx->is_number_integer() || idx->get<long long>() < 1) {
            throw Error(ErrorCode::MalformedInput,
                        std::string(source_name) + ":" + std::to_string(line_no) + ": 'index' must be a positive integer",
                        "index");
        }
        rec.index = idx->get<std::size_t>();

        if (auto it = obj.find("outcome"); it != obj.end() && !it->is_null()) {
            if (!it->is_string()) {
                throw Error(ErrorCode::MalformedInput,
                            std::string(source_name) + ":" + std::to_string(line_no) + ": 'outcome' must be a string",
                            "outcome");
            }
            try {
                rec.outcome = parse_outcome(it->get<std::string>());
            } catch (const Error& e) {
                throw Error(ErrorCode::MalformedInput,
                            std::string(source_name) + ":" + std::to_string(line_no) + ": " + e.what(), "outcome");
            }
        }
        if (auto it = obj.find("success"); it != obj.end() && !it->is_null()) {
            if (!it->is_boolean()) {
                throw Error(ErrorCode::MalformedInput,
                            std::string(source_name) + ":" + std::to_string(line_no) + ": 'success' must be a boolean",
                            "success");
            }
            rec.success = it->get<bool>();
        }
        groups[session_id].push_back(std::move(rec));
    }

    std::vector<PromptSession> sessions;
    sessions.reserve(groups.size());
    for (auto& [session_id, records] : groups) {
        std::stable_sort(records.begin(), records.end(),
                         [](const RawRecord& a, const RawRecord& b) { return a.index < b.index; });
        PromptSession s;
        s.session_id = session_id;
        s.user_id = records.front().user_id;
        s.task_id = records.front().task_id;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            if (i > 0 && r.index == records[i - 1].index) {
                throw Error(ErrorCode::DuplicateRecord,
                            std::string(source_name) + ":" + std::to_string(r.line) + ": duplicate (session_id, index) = (" +
                                session_id + ", " + std::to_string(r.index) + ")",
                            std::to_string(r.line));
            }
            if (r.user_id != s.user_id || r.task_id != s.task_id) {
                throw Error(ErrorCode::MalformedInput,
                            std::string(source_name) + ":" + std::to_string(r.line) + ": session '" + session_id +
                                "' mixes user_id/task_id values",
                            std::to_string(r.line));
            }
            if (r.index != i + 1) {
                throw Error(ErrorCode::MalformedInput,
                            std::string(source_name) + ":" + std::to_string(r.line) + ": session '" + session_id +
                                "' prompt indices are not contiguous from 1",
                            std::to_string(r.line));
            }
            s.prompts.push_back(PromptRecord::make(r.index, r.text, r.success));
        }
        const auto& last = records.back();
        if (!last.outcome) {
            throw Error(ErrorCode::MissingField,
                        std::string(source_name) + ":" + std::to_string(last.line) +
                            ": missing required field 'outcome' on the last record of session '" + session_id + "'",
                        "outcome");
        }
        s.outcome = *last.outcome;
        sessions.push_back(std::move(s));
    }

    std::sort(sessions.begin(), sessions.end(), [](const PromptSession& a, const PromptSession& b) {
        return std::tie(a.task_id, a.session_id) < std::tie(b.task_id, b.session_id);
    });
    return sessions;
}

std::vector<PromptSession> load_sessions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open session file '" + path.string() + "'", path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_sessions(buf.str(), path.string());
}

std::string to_jsonl(const std::vector<PromptSession>& sessions) {
    std::string out;
    for (const auto& s : sessions) {
        for (const auto& p : s.prompts) {
            json obj = {{"session_id", s.session_id}, {"user_id", s.user_id}, {"task_id", s.task_id},
                        {"index", p.index}, {"text", p.text}};
            if (p.success) obj["success"] = *p.success;
            if (p.index == s.prompts.size()) obj["outcome"] = std::string(to_string(s.outcome));
            out += obj.dump();
            out += '\n';
        }
    }
    return out;
}

}  // namespace p2c
