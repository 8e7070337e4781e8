#pragma once

#include "p2c/error.hpp"
#include "p2c/llm_backend.hpp"
#include "p2c/logic.hpp"
#include "p2c/session.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace p2c {

using DescriptionMap = std::map<std::string, std::string, LabelLess>;

/// Two consecutive prompts with their hand-written formalizations and the
/// relationship between them, rendered ahead of the prompts under analysis.
struct FewShotExemplar {
    std::array<std::string, 2> prompt_texts;
    // Description lines plus the "We can formalize Pk as: ..." line.
    std::array<std::string, 2> formalization_texts;
    // "-- Semantic Refinement: ..." and "-- Core Continuation: ..." lines.
    std::string relationship_text;

    /// The counting-zeros pair used for the programming-task dataset.
    static FewShotExemplar builtin();

    /// Parses the plain-text exemplar format, delimited by the line-anchored
    /// markers "Prompt 1 (P1)", "Formalization of P1", "Prompt 2 (P2)",
    /// "Formalization of P2" and "Logical Relationship Between P1 and P2".
    static FewShotExemplar parse(std::string_view text);
    static FewShotExemplar load(const std::filesystem::path& path);

    std::string render() const;

    /// Checks the marker phrases and that both formalizations parse.
    void validate() const;
};

struct Formalization {
    std::size_t prompt_index = 0;
    AtomSet atoms;
    RefinementSet refinements;  // (label in previous prompt, label in this prompt)
    AtomSet continuations;
    std::string raw_text;
};

struct ParsedResponse {
    std::vector<Formalization> formalizations;
    DescriptionMap descriptions;  // session-wide, one description per label
};

struct RequestOptions {
    std::string model_id = kDefaultModel;
    double temperature = 0.0;
    int max_output_tokens = 4096;
};

extern const char* const kSystemText;
extern const char* const kRetryInstruction;

CompletionRequest build_request(const FewShotExemplar& exemplar, std::span<const std::string> prompt_texts,
                                const RequestOptions& options = {});
CompletionRequest build_request(const FewShotExemplar& exemplar, const PromptSession& session,
                                const RequestOptions& options = {});

/// The re-ask sent after a malformed reply: the same request with a grammar
/// reminder inserted before the terminal "formalization:" line.
CompletionRequest build_retry_request(const CompletionRequest& original, std::size_t prompt_count);

/// Parses a model reply into exactly `expected_prompt_count` formalizations.
/// Throws Error with CountMismatch, UnknownLabel, LabelConflict or SyntaxError.
ParsedResponse parse_response(std::string_view text, std::size_t expected_prompt_count);

struct FormalizedSession {
    PromptSession session;
    std::vector<Formalization> formalizations;  // one per prompt, same order
    DescriptionMap descriptions;
};

struct UnformalizedSession {
    PromptSession session;
    ErrorCode code = ErrorCode::Unformalized;
    std::string reason;
};

using FormalizeResult = std::variant<FormalizedSession, UnformalizedSession>;

/// Builds, sends, and parses one joint request over `prompt_texts`, re-asking
/// once on a malformed reply. Parse errors from the second reply propagate.
ParsedResponse formalize_texts(std::span<const std::string> prompt_texts, const FewShotExemplar& exemplar,
                               Backend& backend, const RequestOptions& options = {});

/// Backend errors propagate; a reply that is still malformed after the re-ask
/// yields an UnformalizedSession with the reason.
FormalizeResult formalize_session(const PromptSession& session, const FewShotExemplar& exemplar, Backend& backend,
                                  const RequestOptions& options = {});

/// Formalized-session JSONL, one object per prompt.
std::string to_jsonl(const std::vector<FormalizedSession>& sessions);

/// Re-attaches formalized JSONL records to their sessions. Sessions with no
/// records come back as UnformalizedSession.
std::vector<FormalizeResult> attach_formalizations(const std::vector<PromptSession>& sessions, std::string_view jsonl);

}  // namespace p2c
