#pragma once

#include "p2c/formalizer.hpp"
#include "p2c/llm_backend.hpp"
#include "p2c/logic.hpp"
#include "p2c/session.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace p2c {

inline constexpr std::size_t kDefaultChurnThreshold = 3;
inline constexpr std::size_t kStagnationWindow = 3;

struct DistancePoint {
    std::size_t prompt_index = 0;
    std::size_t distance = 0;
    std::size_t solution = 0;  // 1-based solution that attains the distance
};

struct ChurnPoint {
    std::size_t prompt_index = 0;
    std::size_t size = 0;  // diff against the previous prompt
};

struct ProgressTrace {
    std::string session_id;
    AtomSet solution_atoms;  // empty for the nearest-solution trace
    std::vector<DistancePoint> distances;  // one per student prompt
    std::vector<ChurnPoint> churn;         // prompts 2..n
};

struct ProgressResult {
    std::vector<ProgressTrace> per_solution;
    ProgressTrace nearest;  // per-prompt minimum across solutions
    // Joint extraction over the student prompts followed by the solutions.
    std::vector<Formalization> joint;
    DescriptionMap descriptions;
    std::size_t student_prompt_count = 0;
};

/// Computes traces from an already-formalized joint sequence (student prompts
/// first, then solutions). Exposed separately so recorded extractions can be
/// re-analyzed without a backend.
ProgressResult compute_progress(std::string_view session_id, std::size_t student_prompt_count,
                                std::vector<Formalization> joint, DescriptionMap descriptions,
                                DiffMode mode = DiffMode::Linked);

/// Formalizes the session prompts and the solution prompts in one backend call
/// so their labels share a namespace, then measures each prompt's distance to
/// every solution. Throws InvalidArgument on an empty solution list and
/// Unformalized if the joint sequence cannot be parsed.
ProgressResult measure_progress(const PromptSession& session, const std::vector<std::string>& solutions,
                                const FewShotExemplar& exemplar, Backend& backend, const RequestOptions& options = {},
                                DiffMode mode = DiffMode::Linked);

enum class InterventionKind { Churn, Stagnation };

std::string_view to_string(InterventionKind kind);

struct InterventionPoint {
    std::size_t prompt_index = 0;
    InterventionKind kind = InterventionKind::Churn;

    bool operator==(const InterventionPoint&) const = default;
};

/// Flags prompts whose churn reaches `churn_threshold`, and prompts that end a
/// run of kStagnationWindow non-decreasing, non-zero distances. The stagnation
/// rule is a heuristic.
std::vector<InterventionPoint> detect_intervention_points(const ProgressTrace& trace,
                                                          std::size_t churn_threshold = kDefaultChurnThreshold);

}  // namespace p2c
