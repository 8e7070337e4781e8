#include "p2c/evolution.hpp"

#include "p2c/error.hpp"

namespace p2c {

std::string_view to_string(TransitionClass c) {
    switch (c) {
    case TransitionClass::AddingConstraints: return "AddingConstraints";
    case TransitionClass::ModifyingConstraints: return "ModifyingConstraints";
    case TransitionClass::Rewording: return "Rewording";
    case TransitionClass::Resubmission: return "Resubmission";
    }
    return "?";
}

std::string_view to_string(ReductionRelation r) {
    switch (r) {
    case ReductionRelation::Identical: return "Identical";
    case ReductionRelation::Fewer: return "Fewer";
    case ReductionRelation::More: return "More";
    case ReductionRelation::Ambiguous: return "Ambiguous";
    }
    return "?";
}

TransitionRecord classify_transition(std::string_view session_id, const PromptRecord& prev_prompt,
                                     const Formalization& prev, const PromptRecord& curr_prompt,
                                     const Formalization& curr) {
    if (curr_prompt.index != prev_prompt.index + 1) {
        throw Error(ErrorCode::InvalidArgument, "transition must link consecutive prompts");
    }
    TransitionRecord rec;
    rec.session_id = std::string(session_id);
    rec.from_index = prev_prompt.index;
    rec.to_index = curr_prompt.index;
    rec.diff_size_raw = diff(prev.atoms, curr.atoms).size;
    rec.diff_size_linked = diff(prev.atoms, curr.atoms, curr.refinements).size;

    if (normalize_text(prev_prompt.text) == normalize_text(curr_prompt.text)) {
        rec.cls = TransitionClass::Resubmission;
    } else if (prev.atoms == curr.atoms) {
        rec.cls = TransitionClass::Rewording;
    } else if (is_superset(prev.atoms, curr.atoms, /*strict=*/true)) {
        rec.cls = TransitionClass::AddingConstraints;
    } else {
        rec.cls = TransitionClass::ModifyingConstraints;
    }
    return rec;
}

std::vector<TransitionRecord> classify_session(const FormalizedSession& fs) {
    const auto& prompts = fs.session.prompts;
    if (fs.formalizations.size() != prompts.size()) {
        throw Error(ErrorCode::CountMismatch, "session " + fs.session.session_id + " is not fully formalized");
    }
    std::vector<TransitionRecord> out;
    for (std::size_t i = 1; i < prompts.size(); ++i) {
        out.push_back(classify_transition(fs.session.session_id, prompts[i - 1], fs.formalizations[i - 1], prompts[i],
                                          fs.formalizations[i]));
    }
    return out;
}

std::vector<ReductionFinding> analyze_reduction(const FormalizedSession& fs, const std::vector<bool>& success_flags) {
    const auto& prompts = fs.session.prompts;
    if (success_flags.size() != prompts.size()) {
        throw Error(ErrorCode::InvalidArgument, "success flags (" + std::to_string(success_flags.size()) +
                                                    ") do not match prompt count (" + std::to_string(prompts.size()) + ")");
    }
    std::vector<ReductionFinding> out;
    std::size_t first = 0;
    while (first < success_flags.size() && !success_flags[first]) ++first;
    if (first == success_flags.size()) return out;

    const auto& original = fs.formalizations[first].atoms;
    for (std::size_t i = first + 1; i < prompts.size(); ++i) {
        if (!success_flags[i] || prompts[i].word_count >= prompts[first].word_count) continue;
        const auto& reduced = fs.formalizations[i].atoms;
        ReductionFinding f{fs.session.session_id, prompts[first].index, prompts[i].index, ReductionRelation::Identical};
        if (reduced == original) f.relation = ReductionRelation::Identical;
        else if (reduced.size() < original.size()) f.relation = ReductionRelation::Fewer;
        else if (reduced.size() > original.size()) f.relation = ReductionRelation::More;
        else f.relation = ReductionRelation::Ambiguous;
        out.push_back(std::move(f));
    }
    return out;
}

ReductionTable tabulate(const std::vector<ReductionFinding>& findings) {
    ReductionTable t;
    for (const auto& f : findings) {
        switch (f.relation) {
        case ReductionRelation::Identical: ++t.identical; break;
        case ReductionRelation::Fewer: ++t.fewer; break;
        case ReductionRelation::More: ++t.more; break;
        case ReductionRelation::Ambiguous: ++t.ambiguous; break;
        }
    }
    return t;
}

Heatmap heatmap(const std::vector<TransitionRecord>& transitions) {
    Heatmap h;
    for (const auto& t : transitions) ++h[t.to_index][t.cls];
    return h;
}

}  // namespace p2c
