#pragma once

#include "p2c/formalizer.hpp"
#include "p2c/logic.hpp"
#include "p2c/session.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace p2c {

enum class TransitionClass { AddingConstraints, ModifyingConstraints, Rewording, Resubmission };

inline constexpr std::array<TransitionClass, 4> kTransitionClasses = {
    TransitionClass::AddingConstraints, TransitionClass::ModifyingConstraints, TransitionClass::Rewording,
    TransitionClass::Resubmission};

std::string_view to_string(TransitionClass c);

struct TransitionRecord {
    std::string session_id;
    std::size_t from_index = 0;
    std::size_t to_index = 0;
    TransitionClass cls = TransitionClass::ModifyingConstraints;
    std::size_t diff_size_linked = 0;
    std::size_t diff_size_raw = 0;

    std::size_t diff_size(DiffMode mode) const { return mode == DiffMode::Raw ? diff_size_raw : diff_size_linked; }
};

/// Decision ladder, first match wins:
///   identical normalized text          -> Resubmission
///   equal atom sets                    -> Rewording
///   previous atoms a strict subset     -> AddingConstraints
///   anything else                      -> ModifyingConstraints
/// Throws InvalidArgument unless curr.index == prev.index + 1.
TransitionRecord classify_transition(std::string_view session_id, const PromptRecord& prev_prompt,
                                     const Formalization& prev, const PromptRecord& curr_prompt,
                                     const Formalization& curr);

std::vector<TransitionRecord> classify_session(const FormalizedSession& fs);

enum class ReductionRelation { Identical, Fewer, More, Ambiguous };

std::string_view to_string(ReductionRelation r);

struct ReductionFinding {
    std::string session_id;
    std::size_t original_index = 0;
    std::size_t reduced_index = 0;
    ReductionRelation relation = ReductionRelation::Identical;
};

/// Compares the first successful prompt with each later successful prompt
/// that has strictly fewer words. Equal-size but different atom sets are
/// reported as Ambiguous. Throws InvalidArgument on a flag-count mismatch.
std::vector<ReductionFinding> analyze_reduction(const FormalizedSession& fs, const std::vector<bool>& success_flags);

struct ReductionTable {
    std::size_t identical = 0;
    std::size_t fewer = 0;
    std::size_t more = 0;
    std::size_t ambiguous = 0;
};

ReductionTable tabulate(const std::vector<ReductionFinding>& findings);

/// Prompt step (to_index of the transition) -> class -> count.
using Heatmap = std::map<std::size_t, std::map<TransitionClass, std::size_t>>;

Heatmap heatmap(const std::vector<TransitionRecord>& transitions);

}  // namespace p2c
