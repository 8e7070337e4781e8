#pragma once

#include "p2c/evolution.hpp"
#include "p2c/formalizer.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace p2c {

inline constexpr double kPValueFloor = 1e-15;
inline constexpr std::size_t kExactMannWhitneyMaxN = 12;

struct SummaryRow {
    std::string task_id;
    std::size_t n_users = 0;
    double mean = 0, std = 0, min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

enum class TestMethod { PearsonT, MannWhitneyNormalApprox, MannWhitneyExact };

std::string_view to_string(TestMethod m);

struct TestResult {
    double statistic = 0;
    double p_value = 1;  // two-sided, floored at kPValueFloor
    TestMethod method = TestMethod::PearsonT;
};

/// Linear interpolation between order statistics (h = (n-1)q). `sorted` must
/// be non-empty and ascending.
double quantile_sorted(std::span<const double> sorted, double q);

/// Mean, sample standard deviation (n-1) and five-number summary.
SummaryRow summarize_values(std::string task_id, std::size_t n_users, std::vector<double> values);

/// Statistics over the atom count of every prompt of the task's formalized
/// sessions. Throws Statistics when the task has no prompts.
SummaryRow summarize_constraints(const std::vector<FormalizedSession>& corpus, std::string_view task_id);

/// Product-moment r with a two-sided p from t = r*sqrt((n-2)/(1-r^2)) on n-2
/// degrees of freedom. Requires |x| = |y| >= 3 and neither series constant.
TestResult pearson(std::span<const double> x, std::span<const double> y);

/// U counts pairs with a > b (ties count one half), so U(a,b) + U(b,a) = |a||b|.
/// Two-sided p is exact when |a|+|b| <= 12 and there are no ties, otherwise
/// the normal approximation with tie-corrected variance and continuity
/// correction.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

/// Cochran's n0 = z^2 * 0.25 / margin^2 with finite-population correction,
/// rounded up, at least 1.
std::size_t required_sample_size(std::size_t population, double confidence, double margin);

struct ClassCorrelation {
    TransitionClass cls;
    TestResult result;
    std::size_t sessions = 0;
};

/// Pearson correlation, per class, between each session's share of
/// transitions in that class and the session length in prompts. Sessions with
/// a single prompt have no transitions and are skipped.
std::vector<ClassCorrelation> correlate_changes_with_length(
    const std::vector<std::vector<TransitionRecord>>& per_session_transitions);

struct DiffComparison {
    double mean_success = 0;
    double mean_failure = 0;
    double mean_overall = 0;
    std::size_t n_success = 0;
    std::size_t n_failure = 0;
    TestResult test;
};

DiffComparison compare_diff_sizes(std::span<const double> successful, std::span<const double> unsuccessful);

struct SeriesRow {
    std::size_t step = 0;
    double mean_words = 0;
    double mean_atoms = 0;
    std::size_t participants = 0;
};

std::vector<SeriesRow> words_constraints_series(const std::vector<FormalizedSession>& corpus, std::string_view task_id);

}  // namespace p2c
