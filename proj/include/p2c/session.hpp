#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace p2c {

enum class Outcome { Success, Failure, Unknown };

std::string_view to_string(Outcome outcome);
Outcome parse_outcome(std::string_view text);

/// Strips leading/trailing whitespace and collapses internal whitespace runs
/// to one ASCII space. Whitespace is the Unicode White_Space set; case and
/// punctuation are untouched.
std::string normalize_text(std::string_view text);

/// Number of maximal runs of non-whitespace characters. "a_b_c" is one word.
std::size_t count_words(std::string_view text);

struct PromptRecord {
    std::size_t index = 0;  // 1-based
    std::string text;       // byte-exact input
    std::size_t word_count = 0;
    // Optional per-prompt success marker from the log.
    std::optional<bool> success;

    static PromptRecord make(std::size_t index, std::string text, std::optional<bool> success = {});
};

struct PromptSession {
    std::string session_id;
    std::string user_id;
    std::string task_id;
    std::vector<PromptRecord> prompts;
    Outcome outcome = Outcome::Unknown;

    std::size_t size() const noexcept { return prompts.size(); }

    /// Per-prompt success flags. Explicit `success` fields win; otherwise a
    /// successful session marks only its last prompt.
    std::vector<bool> success_flags() const;
};

/// Parses the session JSONL format. Output is ordered by (task_id, session_id),
/// prompts by index. Throws p2c::Error on malformed lines (with line number),
/// duplicate (session_id, index), missing fields or non-contiguous indices.
std::vector<PromptSession> parse_sessions(std::string_view jsonl, std::string_view source_name = "<input>");
std::vector<PromptSession> load_sessions(const std::filesystem::path& path);

/// Inverse of parse_sessions, one record per prompt.
std::string to_jsonl(const std::vector<PromptSession>& sessions);

}  // namespace p2c
