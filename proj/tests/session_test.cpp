#include "p2c/error.hpp"
#include "p2c/session.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <random>

using namespace p2c;

namespace {

ErrorCode error_of(std::string_view jsonl) {
    try {
        parse_sessions(jsonl);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::Io;
}

std::string record(const std::string& sid, int index, const std::string& text, const char* outcome = nullptr) {
    std::string line = R"({"session_id":")" + sid + R"(","user_id":"u1","task_id":"1","index":)" +
                       std::to_string(index) + R"(,"text":")" + text + "\"";
    if (outcome) line += R"(,"outcome":")" + std::string(outcome) + "\"";
    return line + "}\n";
}

}  // namespace

TEST_CASE("normalize_text trims and collapses Unicode whitespace") {
    CHECK(normalize_text("  Write   me\ta\n function ") == "Write me a function");
    // U+00A0 no-break space, U+2003 em space, U+3000 ideographic space
    CHECK(normalize_text("a\xC2\xA0\xC2\xA0" "b\xE2\x80\x83" "c\xE3\x80\x80") == "a b c");
    CHECK(normalize_text("") == "");
    CHECK(normalize_text(" \t\n") == "");
    CHECK(normalize_text("Case, Punctuation!") == "Case, Punctuation!");
}

TEST_CASE("count_words splits on Unicode whitespace only") {
    CHECK(count_words("") == 0);
    CHECK(count_words("a_b_c") == 1);
    CHECK(count_words("counter([0, 2]) => 2") == 4);
    CHECK(count_words("one\xE2\x80\x83two") == 2);
    CHECK(count_words("  leading and trailing  ") == 3);
}

TEST_CASE("normalize_text is idempotent and preserves word counts") {
    std::mt19937 rng(7);
    const std::vector<std::string> pieces = {"a", "bc", " ", "\t", "\n", "\xC2\xA0", "\xE2\x80\x83", "x_y", "0", ","};
    for (int i = 0; i < 500; ++i) {
        std::string s;
        const int len = std::uniform_int_distribution<int>(0, 20)(rng);
        for (int k = 0; k < len; ++k) s += pieces[std::uniform_int_distribution<std::size_t>(0, pieces.size() - 1)(rng)];
        const auto once = normalize_text(s);
        CHECK(normalize_text(once) == once);
        CHECK(count_words(once) == count_words(s));
    }
}

TEST_CASE("parse_sessions groups, sorts and keeps text byte-exact") {
    const std::string jsonl = record("b", 2, "second  prompt", "success") + record("b", 1, " first") + "\n" +
                              R"({"session_id":"a","user_id":"u2","task_id":"0","index":1,"text":"x","outcome":"failure"})" +
                              "\n";
    const auto sessions = parse_sessions(jsonl);
    REQUIRE(sessions.size() == 2);
    CHECK(sessions[0].session_id == "a");  // task "0" sorts first
    CHECK(sessions[1].prompts.size() == 2);
    CHECK(sessions[1].prompts[0].text == " first");
    CHECK(sessions[1].prompts[1].word_count == 2);
    CHECK(sessions[1].outcome == Outcome::Success);
    CHECK(sessions[0].outcome == Outcome::Failure);
}

TEST_CASE("parse_sessions rejects malformed input") {
    CHECK(error_of("{not json}\n") == ErrorCode::MalformedInput);
    CHECK(error_of(R"({"session_id":"s","user_id":"u","task_id":"1","index":1,"outcome":"success"})") ==
          ErrorCode::MissingField);
    CHECK(error_of(record("s", 1, "a") + record("s", 1, "b", "success")) == ErrorCode::DuplicateRecord);
    CHECK(error_of(record("s", 1, "a") + record("s", 3, "b", "success")) == ErrorCode::MalformedInput);
    CHECK(error_of(record("s", 1, "a")) == ErrorCode::MissingField);  // no outcome on the last record
    CHECK(error_of(record("s", 1, "a", "maybe")) == ErrorCode::MalformedInput);
    CHECK(error_of(record("s", 0, "a", "success")) == ErrorCode::MalformedInput);
}

TEST_CASE("parse errors carry the line number") {
    try {
        parse_sessions(record("s", 1, "a", "success") + "[1,2]\n", "log.jsonl");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("log.jsonl:2") != std::string::npos);
    }
}

TEST_CASE("success flags: explicit markers win, otherwise the last prompt of a successful session") {
    auto sessions = parse_sessions(record("s", 1, "a") + record("s", 2, "b", "success"));
    CHECK(sessions[0].success_flags() == std::vector<bool>{false, true});
    sessions = parse_sessions(record("s", 1, "a") + record("s", 2, "b", "failure"));
    CHECK(sessions[0].success_flags() == std::vector<bool>{false, false});
    sessions = parse_sessions(
        R"({"session_id":"s","user_id":"u","task_id":"1","index":1,"text":"a","success":true})"
        "\n"
        R"({"session_id":"s","user_id":"u","task_id":"1","index":2,"text":"b","success":false,"outcome":"success"})");
    CHECK(sessions[0].success_flags() == std::vector<bool>{true, false});
}

TEST_CASE("to_jsonl round-trips the shipped corpus") {
    const auto sessions = p2c::testing::shipped_sessions();
    CHECK(sessions.size() == 22);
    const auto again = parse_sessions(to_jsonl(sessions));
    REQUIRE(again.size() == sessions.size());
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        CHECK(again[i].session_id == sessions[i].session_id);
        CHECK(again[i].outcome == sessions[i].outcome);
        REQUIRE(again[i].prompts.size() == sessions[i].prompts.size());
        for (std::size_t k = 0; k < sessions[i].prompts.size(); ++k) {
            CHECK(again[i].prompts[k].text == sessions[i].prompts[k].text);
            CHECK(again[i].prompts[k].success == sessions[i].prompts[k].success);
        }
    }
}

TEST_CASE("load_sessions reports a missing file as an I/O error") {
    try {
        load_sessions("/nonexistent/sessions.jsonl");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Io);
        CHECK(exit_code_for(e.code()) == 1);
    }
}
