#include "p2c/formalizer.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>

namespace p2c {

const char* const kSystemText =
    "You translate programming prompts into propositional-logic constraints. "
    "Follow the format of the examples exactly.";

const char* const kRetryInstruction =
    "Your previous answer did not follow the required format. For every prompt Pk above, list each constraint "
    "on its own line as \"Ck: <description>\", reuse a label only for an unchanged constraint, and end the block "
    "with \"We can formalize Pk as: Pk -> (Ca ∧ Cb ∧ ...)\". Produce exactly one such block per prompt.";

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kArrow = "\xE2\x86\x92";   // →
constexpr std::string_view kWedge = "\xE2\x88\xA7";   // ∧
constexpr std::string_view kVee = "\xE2\x88\xA8";     // ∨
constexpr std::string_view kNot = "\xC2\xAC";         // ¬
constexpr std::string_view kBullet = "\xE2\x80\xA2";  // •

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        pos = end + 1;
    }
    return lines;
}

// Drops markdown/LaTeX decoration that never carries labels or connectives,
// then leading bullets.
std::string clean_line(std::string_view raw) {
    std::string s;
    s.reserve(raw.size());
    for (char c : raw) {
        if (c != '$' && c != '*' && c != '`') s.push_back(c);
    }
    std::string_view v = trim(s);
    for (;;) {
        if (v.starts_with("-")) v.remove_prefix(1);
        else if (v.starts_with(kBullet)) v.remove_prefix(kBullet.size());
        else break;
        v = trim(v);
    }
    return std::string(v);
}

[[noreturn]] void syntax_error(const std::string& message, const std::string& line) {
    throw Error(ErrorCode::SyntaxError, message + ": \"" + line + "\"", line);
}

const std::regex& label_regex() {
    static const std::regex re(R"((^|[^A-Za-z0-9_])(C[0-9]+)(?![A-Za-z0-9_]))");
    return re;
}

std::vector<std::pair<std::size_t, std::string>> find_labels(const std::string& text) {
    std::vector<std::pair<std::size_t, std::string>> out;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), label_regex()); it != std::sregex_iterator(); ++it) {
        out.emplace_back(static_cast<std::size_t>(it->position(2)), (*it)[2].str());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Conjunction expressions.

enum class Tok { LParen, RParen, And, Label, End };

struct Token {
    Tok kind;
    std::string text;
};

class ExpressionParser {
public:
    ExpressionParser(std::string_view expr, const std::string& line) : src_(expr), line_(line) {}

    AtomSet parse() {
        AtomSet atoms;
        advance();
        parse_conjunction(atoms, /*allow_empty=*/true);
        if (cur_.kind != Tok::End) syntax_error("unexpected token '" + cur_.text + "' in expression", line_);
        return atoms;
    }

private:
    void parse_conjunction(AtomSet& atoms, bool allow_empty) {
        if (cur_.kind == Tok::End || cur_.kind == Tok::RParen) {
            if (!allow_empty) syntax_error("expected a constraint label", line_);
            return;
        }
        parse_term(atoms);
        while (cur_.kind == Tok::And) {
            advance();
            parse_term(atoms);
        }
    }

    void parse_term(AtomSet& atoms) {
        if (cur_.kind == Tok::Label) {
            atoms.insert(cur_.text);
            advance();
            return;
        }
        if (cur_.kind == Tok::LParen) {
            advance();
            parse_conjunction(atoms, /*allow_empty=*/true);
            if (cur_.kind != Tok::RParen) syntax_error("unbalanced parentheses in expression", line_);
            advance();
            return;
        }
        syntax_error("expected a constraint label or '('", line_);
    }

    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ >= src_.size()) {
            cur_ = {Tok::End, ""};
            return;
        }
        const auto rest = src_.substr(pos_);
        const char c = rest.front();
        if (c == '(') { ++pos_; cur_ = {Tok::LParen, "("}; return; }
        if (c == ')') { ++pos_; cur_ = {Tok::RParen, ")"}; return; }
        if (rest.starts_with(kWedge)) { pos_ += kWedge.size(); cur_ = {Tok::And, "∧"}; return; }
        if (rest.starts_with("/\\")) { pos_ += 2; cur_ = {Tok::And, "/\\"}; return; }
        if (c == '^') { ++pos_; cur_ = {Tok::And, "^"}; return; }
        if (rest.starts_with(kVee) || rest.starts_with("\\/") || rest.starts_with(kNot) || c == '~' || c == '!' ||
            c == '|') {
            syntax_error("only conjunctions are supported", line_);
        }
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t n = 0;
            while (n < rest.size() && (std::isalnum(static_cast<unsigned char>(rest[n])) || rest[n] == '_')) ++n;
            const std::string word(rest.substr(0, n));
            pos_ += n;
            const auto lw = lower_ascii(word);
            if (lw == "and") { cur_ = {Tok::And, word}; return; }
            if (lw == "or" || lw == "not" || lw == "xor") syntax_error("only conjunctions are supported", line_);
            static const std::regex label_re("C[0-9]+");
            if (std::regex_match(word, label_re)) { cur_ = {Tok::Label, word}; return; }
            syntax_error("unknown token '" + word + "' in expression", line_);
        }
        syntax_error(std::string("unexpected character '") + c + "' in expression", line_);
    }

    std::string_view src_;
    const std::string& line_;
    std::size_t pos_ = 0;
    Token cur_{Tok::End, ""};
};

// `rest` is everything after "We can formalize Pk as[:]".
AtomSet parse_formalization_expression(std::string_view rest, std::size_t index, const std::string& line) {
    std::string_view expr = trim(rest);
    while (!expr.empty() && (expr.back() == '.' || expr.back() == ';')) expr = trim(expr.substr(0, expr.size() - 1));

    auto strip_implication = [&](std::string_view& v) {
        v = trim(v);
        if (v.starts_with(kArrow)) { v.remove_prefix(kArrow.size()); return true; }
        if (v.starts_with("->")) { v.remove_prefix(2); return true; }
        if (lower_ascii(v.substr(0, 7)) == "implies" &&
            (v.size() == 7 || !std::isalnum(static_cast<unsigned char>(v[7])))) {
            v.remove_prefix(7);
            return true;
        }
        return false;
    };

    if (expr.size() >= 2 && (expr[0] == 'P' || expr[0] == 'p') && std::isdigit(static_cast<unsigned char>(expr[1]))) {
        std::size_t n = 1;
        while (n < expr.size() && std::isdigit(static_cast<unsigned char>(expr[n]))) ++n;
        const auto lhs = std::stoul(std::string(expr.substr(1, n - 1)));
        if (lhs != index) syntax_error("implication names P" + std::to_string(lhs) + " inside the block for P" +
                                           std::to_string(index), line);
        expr.remove_prefix(n);
        if (!strip_implication(expr)) syntax_error("expected an implication after P" + std::to_string(index), line);
    } else {
        strip_implication(expr);
    }
    return ExpressionParser(expr, line).parse();
}

// "C2: text C3: text" on one line.
std::vector<std::pair<std::string, std::string>> parse_description_line(const std::string& line) {
    static const std::regex def_re(R"((^|\s)(C[0-9]+)\s*:\s*)");
    std::vector<std::pair<std::string, std::string>> defs;
    std::vector<std::smatch> matches;
    for (auto it = std::sregex_iterator(line.begin(), line.end(), def_re); it != std::sregex_iterator(); ++it) {
        matches.push_back(*it);
    }
    for (std::size_t i = 0; i < matches.size(); ++i) {
        const auto start = static_cast<std::size_t>(matches[i].position(0) + matches[i].length(0));
        const auto end = i + 1 < matches.size() ? static_cast<std::size_t>(matches[i + 1].position(0)) : line.size();
        auto desc = normalize_text(std::string_view(line).substr(start, end - start));
        if (desc.empty()) syntax_error("constraint " + matches[i][2].str() + " has an empty description", line);
        defs.emplace_back(matches[i][2].str(), std::move(desc));
    }
    return defs;
}

std::string after_marker(const std::string& line, const std::string& lower, std::string_view marker) {
    auto pos = lower.find(marker);
    pos += marker.size();
    auto colon = line.find(':', pos);
    if (colon == std::string::npos) return line.substr(pos);
    return line.substr(colon + 1);
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        if (!out.empty()) out += '\n';
        out += l;
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

ParsedResponse parse_response(std::string_view text, std::size_t expected_prompt_count) {
    static const std::regex formalize_re(R"(we can formalize\s+p([0-9]+)\s+as\s*:?)");
    static const std::regex header_re(R"(^formalization of\s+p([0-9]+)\b)");
    static const std::regex relation_re(R"(logical relationship between\s+p([0-9]+)\s+and\s+p([0-9]+))");
    static const std::regex prompt_echo_re(R"(^prompt\s+[0-9]+\s*\(p[0-9]+\))");
    static const std::regex description_re(R"(^C[0-9]+\s*:)");

    std::map<std::size_t, Formalization> blocks;
    std::vector<std::string> pending;
    std::size_t relation_target = 0;  // 0: outside a relationship block
    std::optional<std::size_t> last_formalized;
    ParsedResponse parsed;

    struct RelationLine {
        std::size_t target;
        RefinementSet refinements;
        AtomSet continuations;
        std::string line;
    };
    std::vector<RelationLine> relations;

    auto relation_for = [&](const std::string& line) -> std::size_t {
        if (relation_target) return relation_target;
        if (last_formalized && *last_formalized >= 2) return *last_formalized;
        syntax_error("relationship line outside a relationship block", line);
    };

    for (const auto& raw : split_lines(text)) {
        const auto line = clean_line(raw);
        if (line.empty()) continue;
        const auto lower = lower_ascii(line);
        std::smatch m;

        if (std::regex_search(lower, prompt_echo_re) || lower == "prompts" || lower == "formalization:") continue;
        if (std::regex_search(lower, m, relation_re)) {
            const auto a = std::stoul(m[1].str());
            const auto b = std::stoul(m[2].str());
            if (b != a + 1) syntax_error("relationship must link consecutive prompts", line);
            relation_target = b;
            continue;
        }
        if (lower.find("semantic refinement") != std::string::npos) {
            RelationLine rel{relation_for(line), {}, {}, line};
            const auto content = after_marker(line, lower, "semantic refinement");
            std::stringstream clauses(content);
            std::string clause;
            while (std::getline(clauses, clause, ';')) {
                const auto lc = lower_ascii(clause);
                const auto evolves = lc.find("evolves");
                if (evolves == std::string::npos) continue;
                const auto from = lc.find("from", evolves);
                const auto before = find_labels(clause.substr(0, evolves));
                const auto after = from == std::string::npos ? decltype(before){} : find_labels(clause.substr(from));
                if (before.empty() || after.empty()) {
                    syntax_error("refinement must name '<old> evolves from ... to <new>'", line);
                }
                rel.refinements.emplace(before.back().second, after.front().second);
            }
            relations.push_back(std::move(rel));
            continue;
        }
        if (lower.find("core continuation") != std::string::npos) {
            RelationLine rel{relation_for(line), {}, {}, line};
            auto content = after_marker(line, lower, "core continuation");
            if (auto colon = content.find(':'); colon != std::string::npos) content.resize(colon);
            for (auto& [pos, label] : find_labels(content)) rel.continuations.insert(label);
            relations.push_back(std::move(rel));
            continue;
        }
        if (std::regex_search(lower, m, formalize_re)) {
            const auto index = std::stoul(m[1].str());
            if (blocks.contains(index)) {
                throw Error(ErrorCode::CountMismatch, "duplicate formalization block for P" + std::to_string(index),
                            line);
            }
            const auto expr_start = static_cast<std::size_t>(m.position(0) + m.length(0));
            Formalization f;
            f.prompt_index = index;
            f.atoms = parse_formalization_expression(std::string_view(line).substr(expr_start), index, line);
            pending.push_back(raw);
            f.raw_text = join_lines(pending);
            pending.clear();
            blocks.emplace(index, std::move(f));
            last_formalized = index;
            relation_target = 0;
            continue;
        }
        if (std::regex_search(lower, header_re)) {
            pending.clear();
            pending.push_back(raw);
            relation_target = 0;
            continue;
        }
        if (std::regex_search(line, description_re)) {
            for (auto& [label, desc] : parse_description_line(line)) {
                auto [it, inserted] = parsed.descriptions.emplace(label, desc);
                if (!inserted && it->second != desc) {
                    throw Error(ErrorCode::LabelConflict,
                                label + " is bound to two descriptions: \"" + it->second + "\" and \"" + desc + "\"",
                                label);
                }
            }
            pending.push_back(raw);
            continue;
        }
        pending.push_back(raw);
    }

    if (blocks.size() != expected_prompt_count) {
        throw Error(ErrorCode::CountMismatch, "expected " + std::to_string(expected_prompt_count) +
                                                  " formalization blocks, found " + std::to_string(blocks.size()));
    }
    std::size_t expected_index = 1;
    for (const auto& [index, f] : blocks) {
        if (index != expected_index++) {
            throw Error(ErrorCode::CountMismatch, "formalization blocks are not numbered P1..P" +
                                                      std::to_string(expected_prompt_count));
        }
        for (const auto& label : f.atoms) {
            if (!parsed.descriptions.contains(label)) {
                throw Error(ErrorCode::UnknownLabel, label + " is used in P" + std::to_string(index) +
                                                         " but never described", label);
            }
        }
    }

    for (auto& rel : relations) {
        auto target = blocks.find(rel.target);
        if (target == blocks.end() || rel.target < 2) syntax_error("relationship refers to an unknown prompt", rel.line);
        const auto& previous = blocks.at(rel.target - 1);
        for (const auto& pair : rel.refinements) {
            if (!previous.atoms.contains(pair.first) || !target->second.atoms.contains(pair.second)) {
                syntax_error("refinement " + pair.first + " -> " + pair.second + " does not link P" +
                                 std::to_string(rel.target - 1) + " to P" + std::to_string(rel.target),
                             rel.line);
            }
            target->second.refinements.insert(pair);
        }
        for (const auto& label : rel.continuations) {
            if (!target->second.atoms.contains(label)) {
                syntax_error("continuation " + label + " is not a constraint of P" + std::to_string(rel.target),
                             rel.line);
            }
            target->second.continuations.insert(label);
        }
    }

    for (auto& [index, f] : blocks) parsed.formalizations.push_back(std::move(f));
    return parsed;
}

// ---------------------------------------------------------------------------

FewShotExemplar FewShotExemplar::builtin() {
    FewShotExemplar ex;
    ex.prompt_texts = {"Write me a Python function that counts the number of '0's in the list.",
                       "Write me a Python function that counts the number of 0 in the list."};
    ex.formalization_texts = {
        "C1: A Python function is written.\n"
        "C2: The function counts the number of '0' (as a string) in the list.\n"
        "C3: The input to the function is a valid list.\n"
        "We can formalize P1 as: P1 → (C1 ∧ C2 ∧ C3)",
        "C1: A Python function is written.\n"
        "C4: The function counts the number of 0 (as an integer) in the list.\n"
        "C3: The input to the function is a valid list.\n"
        "We can formalize P2 as: P2 → (C1 ∧ C4 ∧ C3)"};
    ex.relationship_text =
        "-- Semantic Refinement: C2 evolves from counting '0' (string) to C4 counting 0 (integer).\n"
        "-- Core Continuation: C1 ∧ C3: The existence of a Python function and the assumption of a valid list "
        "remain unchanged.";
    return ex;
}

FewShotExemplar FewShotExemplar::parse(std::string_view text) {
    static const std::regex p1_re(R"(^\s*prompt\s+1\s*\(p1\)\s*:?\s*)", std::regex::icase);
    static const std::regex p2_re(R"(^\s*prompt\s+2\s*\(p2\)\s*:?\s*)", std::regex::icase);
    static const std::regex f1_re(R"(^\s*formalization of\s+p1\s*:?\s*$)", std::regex::icase);
    static const std::regex f2_re(R"(^\s*formalization of\s+p2\s*:?\s*$)", std::regex::icase);
    static const std::regex rel_re(R"(^\s*logical relationship between\s+p1\s+and\s+p2\s*:?\s*$)",
                                   std::regex::icase);

    enum class Part { None, Prompt1, Form1, Prompt2, Form2, Relation };
    Part part = Part::None;
    std::array<std::vector<std::string>, 5> parts;
    int seen = 0;

    auto start = [&](Part next, int order, const std::string& line) {
        if (seen != order) {
            throw Error(ErrorCode::MalformedInput, "exemplar markers out of order at \"" + line + "\"", line);
        }
        ++seen;
        part = next;
    };

    for (const auto& line : split_lines(text)) {
        std::smatch m;
        if (std::regex_search(line, m, p1_re)) {
            start(Part::Prompt1, 0, line);
            parts[0].push_back(m.suffix().str());
        } else if (std::regex_search(line, f1_re)) {
            start(Part::Form1, 1, line);
        } else if (std::regex_search(line, m, p2_re)) {
            start(Part::Prompt2, 2, line);
            parts[2].push_back(m.suffix().str());
        } else if (std::regex_search(line, f2_re)) {
            start(Part::Form2, 3, line);
        } else if (std::regex_search(line, rel_re)) {
            start(Part::Relation, 4, line);
        } else if (part != Part::None) {
            parts[static_cast<int>(part) - 1].push_back(line);
        } else if (!trim(line).empty()) {
            throw Error(ErrorCode::MalformedInput, "text before the first exemplar marker: \"" + line + "\"", line);
        }
    }
    if (seen != 5) throw Error(ErrorCode::MalformedInput, "exemplar is missing grammar markers");

    auto joined = [&](int i) { return std::string(trim(join_lines(parts[i]))); };
    FewShotExemplar ex;
    ex.prompt_texts = {joined(0), joined(2)};
    ex.formalization_texts = {joined(1), joined(3)};
    ex.relationship_text = joined(4);
    ex.validate();
    return ex;
}

FewShotExemplar FewShotExemplar::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read exemplar '" + path.string() + "'", path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string FewShotExemplar::render() const {
    std::string out;
    out += "Prompt 1 (P1) " + prompt_texts[0] + "\n";
    out += "Formalization of P1:\n" + formalization_texts[0] + "\n";
    out += "Prompt 2 (P2) " + prompt_texts[1] + "\n";
    out += "Formalization of P2:\n" + formalization_texts[1] + "\n";
    out += "Logical Relationship Between P1 and P2\n" + relationship_text + "\n";
    return out;
}

void FewShotExemplar::validate() const {
    for (std::size_t i = 0; i < 2; ++i) {
        const auto marker = "We can formalize P" + std::to_string(i + 1);
        if (formalization_texts[i].find(marker) == std::string::npos) {
            throw Error(ErrorCode::MalformedInput, "exemplar formalization " + std::to_string(i + 1) +
                                                       " lacks \"" + marker + "\"");
        }
        if (trim(prompt_texts[i]).empty()) {
            throw Error(ErrorCode::MalformedInput, "exemplar prompt " + std::to_string(i + 1) + " is empty");
        }
    }
    const auto lower = lower_ascii(relationship_text);
    if (lower.find("semantic refinement") == std::string::npos || lower.find("core continuation") == std::string::npos) {
        throw Error(ErrorCode::MalformedInput, "exemplar relationship needs Semantic Refinement and Core Continuation lines");
    }
    parse_response(render(), 2);
}

// ---------------------------------------------------------------------------

CompletionRequest build_request(const FewShotExemplar& exemplar, std::span<const std::string> prompt_texts,
                                const RequestOptions& options) {
    if (prompt_texts.empty()) throw Error(ErrorCode::InvalidArgument, "cannot build a request for zero prompts");
    std::string user = exemplar.render();
    user += "prompts\n";
    for (std::size_t i = 0; i < prompt_texts.size(); ++i) {
        user += "P" + std::to_string(i + 1) + " " + prompt_texts[i] + "\n";
    }
    user += "formalization:";

    CompletionRequest req;
    req.system_text = kSystemText;
    req.user_text = std::move(user);
    req.model_id = options.model_id;
    req.temperature = options.temperature;
    req.max_output_tokens = options.max_output_tokens;
    return req;
}

CompletionRequest build_request(const FewShotExemplar& exemplar, const PromptSession& session,
                                const RequestOptions& options) {
    std::vector<std::string> texts;
    texts.reserve(session.prompts.size());
    for (const auto& p : session.prompts) texts.push_back(p.text);
    return build_request(exemplar, texts, options);
}

CompletionRequest build_retry_request(const CompletionRequest& original, std::size_t prompt_count) {
    static constexpr std::string_view kTerminal = "formalization:";
    CompletionRequest retry = original;
    auto body = std::string_view(original.user_text);
    if (body.ends_with(kTerminal)) body.remove_suffix(kTerminal.size());
    retry.user_text = std::string(body) + kRetryInstruction + " There are " + std::to_string(prompt_count) +
                      " prompts.\n" + std::string(kTerminal);
    return retry;
}

ParsedResponse formalize_texts(std::span<const std::string> prompt_texts, const FewShotExemplar& exemplar,
                               Backend& backend, const RequestOptions& options) {
    const auto request = build_request(exemplar, prompt_texts, options);
    const auto first = backend.complete(request);
    try {
        return parse_response(first.text, prompt_texts.size());
    } catch (const Error& e) {
        if (category_of(e.code()) != ErrorCategory::Parse) throw;
        spdlog::warn("malformed formalization ({}: {}); re-asking once", to_string(e.code()), e.what());
    }
    const auto second = backend.complete(build_retry_request(request, prompt_texts.size()));
    return parse_response(second.text, prompt_texts.size());
}

FormalizeResult formalize_session(const PromptSession& session, const FewShotExemplar& exemplar, Backend& backend,
                                  const RequestOptions& options) {
    if (session.prompts.empty()) throw Error(ErrorCode::InvalidArgument, "session has no prompts");
    std::vector<std::string> texts;
    for (const auto& p : session.prompts) texts.push_back(p.text);
    try {
        auto parsed = formalize_texts(texts, exemplar, backend, options);
        return FormalizedSession{session, std::move(parsed.formalizations), std::move(parsed.descriptions)};
    } catch (const Error& e) {
        if (category_of(e.code()) != ErrorCategory::Parse) throw;
        spdlog::warn("session {} unformalized: {}", session.session_id, e.what());
        return UnformalizedSession{session, e.code(), e.what()};
    }
}

std::string to_jsonl(const std::vector<FormalizedSession>& sessions) {
    std::string out;
    for (const auto& fs : sessions) {
        for (const auto& f : fs.formalizations) {
            ordered_json obj;
            obj["session_id"] = fs.session.session_id;
            obj["index"] = f.prompt_index;
            obj["atoms"] = ordered_json::array();
            obj["descriptions"] = ordered_json::object();
            for (const auto& label : f.atoms) {
                obj["atoms"].push_back(label);
                if (auto it = fs.descriptions.find(label); it != fs.descriptions.end()) {
                    obj["descriptions"][label] = it->second;
                }
            }
            obj["refinements"] = ordered_json::array();
            for (const auto& [o, n] : f.refinements) obj["refinements"].push_back({o, n});
            obj["continuations"] = ordered_json::array();
            for (const auto& label : f.continuations) obj["continuations"].push_back(label);
            obj["raw"] = f.raw_text;
            out += obj.dump();
            out += '\n';
        }
    }
    return out;
}

std::vector<FormalizeResult> attach_formalizations(const std::vector<PromptSession>& sessions, std::string_view jsonl) {
    struct Collected {
        std::map<std::size_t, Formalization> blocks;
        DescriptionMap descriptions;
    };
    std::map<std::string, Collected> by_session;

    std::size_t line_no = 0;
    for (const auto& line : split_lines(jsonl)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            Formalization f;
            f.prompt_index = j.at("index").get<std::size_t>();
            for (const auto& a : j.at("atoms")) f.atoms.insert(a.get<std::string>());
            for (const auto& r : j.value("refinements", nlohmann::json::array())) {
                f.refinements.emplace(r.at(0).get<std::string>(), r.at(1).get<std::string>());
            }
            for (const auto& c : j.value("continuations", nlohmann::json::array())) f.continuations.insert(c.get<std::string>());
            f.raw_text = j.value("raw", std::string{});
            auto& col = by_session[j.at("session_id").get<std::string>()];
            const auto descriptions = j.value("descriptions", nlohmann::json::object());
            for (const auto& [label, desc] : descriptions.items()) {
                auto [it, inserted] = col.descriptions.emplace(label, desc.get<std::string>());
                if (!inserted && it->second != desc.get<std::string>()) {
                    throw Error(ErrorCode::LabelConflict, "formalized line " + std::to_string(line_no) + ": " + label +
                                                              " has two descriptions", label);
                }
            }
            if (!col.blocks.emplace(f.prompt_index, std::move(f)).second) {
                throw Error(ErrorCode::DuplicateRecord,
                            "formalized line " + std::to_string(line_no) + ": duplicate (session_id, index)",
                            std::to_string(line_no));
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::MalformedInput, "formalized line " + std::to_string(line_no) + ": " + e.what(),
                        std::to_string(line_no));
        }
    }

    std::vector<FormalizeResult> results;
    for (const auto& s : sessions) {
        auto it = by_session.find(s.session_id);
        if (it == by_session.end()) {
            results.emplace_back(UnformalizedSession{s, ErrorCode::Unformalized, "no formalization records"});
            continue;
        }
        auto& col = it->second;
        if (col.blocks.size() != s.prompts.size() || col.blocks.begin()->first != 1 ||
            col.blocks.rbegin()->first != s.prompts.size()) {
            throw Error(ErrorCode::CountMismatch, "session " + s.session_id + " has " + std::to_string(col.blocks.size()) +
                                                      " formalization records for " + std::to_string(s.prompts.size()) +
                                                      " prompts", s.session_id);
        }
        FormalizedSession fs{s, {}, std::move(col.descriptions)};
        for (auto& [idx, f] : col.blocks) fs.formalizations.push_back(std::move(f));
        results.emplace_back(std::move(fs));
    }
    return results;
}

}  // namespace p2c
