#include "p2c/progress.hpp"

#include "p2c/error.hpp"

#include <algorithm>
#include <tuple>
#include <limits>

namespace p2c {

std::string_view to_string(InterventionKind kind) {
    return kind == InterventionKind::Churn ? "churn" : "stagnation";
}

ProgressResult compute_progress(std::string_view session_id, std::size_t student_prompt_count,
                                std::vector<Formalization> joint, DescriptionMap descriptions, DiffMode mode) {
    if (student_prompt_count == 0 || joint.size() <= student_prompt_count) {
        throw Error(ErrorCode::InvalidArgument, "joint extraction needs at least one student prompt and one solution");
    }
    const std::size_t n = student_prompt_count;
    const std::size_t solution_count = joint.size() - n;

    ProgressResult result;
    result.student_prompt_count = n;

    std::vector<ChurnPoint> churn;
    for (std::size_t i = 1; i < n; ++i) {
        const auto& refinements = mode == DiffMode::Linked ? joint[i].refinements : RefinementSet{};
        churn.push_back({joint[i].prompt_index, diff(joint[i - 1].atoms, joint[i].atoms, refinements).size});
    }

    for (std::size_t s = 0; s < solution_count; ++s) {
        const auto& solution = joint[n + s];
        ProgressTrace trace;
        trace.session_id = std::string(session_id);
        trace.solution_atoms = solution.atoms;
        trace.churn = churn;
        for (std::size_t p = 0; p < n; ++p) {
            // Only a prompt adjacent to the solution in the joint sequence has
            // declared refinement links to it; they point prompt -> solution,
            // so they are flipped for a solution-to-prompt diff.
            RefinementSet links;
            if (mode == DiffMode::Linked && p + 1 == n + s) {
                for (const auto& [old_label, new_label] : solution.refinements) links.emplace(new_label, old_label);
            }
            trace.distances.push_back({joint[p].prompt_index, diff(solution.atoms, joint[p].atoms, links).size, s + 1});
        }
        result.per_solution.push_back(std::move(trace));
    }

    result.nearest.session_id = std::string(session_id);
    result.nearest.churn = churn;
    for (std::size_t p = 0; p < n; ++p) {
        DistancePoint best{joint[p].prompt_index, std::numeric_limits<std::size_t>::max(), 0};
        for (const auto& trace : result.per_solution) {
            if (trace.distances[p].distance < best.distance) best = trace.distances[p];
        }
        result.nearest.distances.push_back(best);
    }

    result.joint = std::move(joint);
    result.descriptions = std::move(descriptions);
    return result;
}

ProgressResult measure_progress(const PromptSession& session, const std::vector<std::string>& solutions,
                                const FewShotExemplar& exemplar, Backend& backend, const RequestOptions& options,
                                DiffMode mode) {
    if (solutions.empty()) throw Error(ErrorCode::InvalidArgument, "at least one solution prompt is required");
    if (session.prompts.empty()) throw Error(ErrorCode::InvalidArgument, "session has no prompts");

    std::vector<std::string> texts;
    for (const auto& p : session.prompts) texts.push_back(p.text);
    texts.insert(texts.end(), solutions.begin(), solutions.end());

    ParsedResponse parsed;
    try {
        parsed = formalize_texts(texts, exemplar, backend, options);
    } catch (const Error& e) {
        if (category_of(e.code()) != ErrorCategory::Parse) throw;
        throw Error(ErrorCode::Unformalized,
                    "joint extraction of session " + session.session_id + " with its solution prompt(s) failed: " +
                        e.what(),
                    std::string(to_string(e.code())));
    }
    return compute_progress(session.session_id, session.prompts.size(), std::move(parsed.formalizations),
                            std::move(parsed.descriptions), mode);
}

std::vector<InterventionPoint> detect_intervention_points(const ProgressTrace& trace, std::size_t churn_threshold) {
    std::vector<InterventionPoint> out;
    for (const auto& c : trace.churn) {
        if (c.size >= churn_threshold) out.push_back({c.prompt_index, InterventionKind::Churn});
    }
    const auto& d = trace.distances;
    for (std::size_t k = kStagnationWindow - 1; k < d.size(); ++k) {
        bool stagnant = d[k].distance > 0;
        for (std::size_t j = k + 1 - (kStagnationWindow - 1); stagnant && j <= k; ++j) {
            stagnant = d[j - 1].distance <= d[j].distance;
        }
        if (stagnant) out.push_back({d[k].prompt_index, InterventionKind::Stagnation});
    }
    std::sort(out.begin(), out.end(), [](const InterventionPoint& a, const InterventionPoint& b) {
        return std::tie(a.prompt_index, a.kind) < std::tie(b.prompt_index, b.kind);
    });
    return out;
}

}  // namespace p2c
