#include "p2c/stats.hpp"

#include "p2c/error.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace p2c {

namespace {

double floor_p(double p) {
    if (!(p >= kPValueFloor)) return kPValueFloor;
    return std::min(p, 1.0);
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Midranks, 1-based.
std::vector<double> midranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

// Number of arrangements of m first-sample and n second-sample items yielding
// each U in 0..m*n.
std::vector<double> u_distribution(std::size_t m, std::size_t n) {
    // table[i][j] is the distribution for sizes (i, j)
    std::vector<std::vector<std::vector<double>>> table(m + 1, std::vector<std::vector<double>>(n + 1));
    for (std::size_t i = 0; i <= m; ++i) {
        for (std::size_t j = 0; j <= n; ++j) {
            auto& dist = table[i][j];
            dist.assign(i * j + 1, 0.0);
            if (i == 0 || j == 0) {
                dist[0] = 1.0;
                continue;
            }
            // Largest item from the first sample beats all j of the second.
            const auto& with_a = table[i - 1][j];
            for (std::size_t u = 0; u < with_a.size(); ++u) dist[u + j] += with_a[u];
            const auto& with_b = table[i][j - 1];
            for (std::size_t u = 0; u < with_b.size(); ++u) dist[u] += with_b[u];
        }
    }
    return table[m][n];
}

}  // namespace

std::string_view to_string(TestMethod m) {
    switch (m) {
    case TestMethod::PearsonT: return "PearsonT";
    case TestMethod::MannWhitneyNormalApprox: return "MannWhitneyNormalApprox";
    case TestMethod::MannWhitneyExact: return "MannWhitneyExact";
    }
    return "?";
}

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw Error(ErrorCode::Statistics, "quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

SummaryRow summarize_values(std::string task_id, std::size_t n_users, std::vector<double> values) {
    if (values.empty()) throw Error(ErrorCode::Statistics, "no constraint counts for task " + task_id, task_id);
    std::sort(values.begin(), values.end());
    SummaryRow row;
    row.task_id = std::move(task_id);
    row.n_users = n_users;
    row.mean = mean_of(values);
    if (values.size() > 1) {
        double ss = 0;
        for (double v : values) ss += (v - row.mean) * (v - row.mean);
        row.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    row.min = values.front();
    row.q1 = quantile_sorted(values, 0.25);
    row.median = quantile_sorted(values, 0.5);
    row.q3 = quantile_sorted(values, 0.75);
    row.max = values.back();
    return row;
}

SummaryRow summarize_constraints(const std::vector<FormalizedSession>& corpus, std::string_view task_id) {
    std::vector<double> counts;
    std::set<std::string> users;
    for (const auto& fs : corpus) {
        if (fs.session.task_id != task_id) continue;
        users.insert(fs.session.user_id);
        for (const auto& f : fs.formalizations) counts.push_back(static_cast<double>(f.atoms.size()));
    }
    return summarize_values(std::string(task_id), users.size(), std::move(counts));
}

TestResult pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "pearson: series lengths differ");
    if (x.size() < 3) throw Error(ErrorCode::InvalidArgument, "pearson: at least 3 paired observations required");
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0 || syy == 0) throw Error(ErrorCode::Statistics, "pearson: correlation undefined for a constant series");
    const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);

    const double df = static_cast<double>(x.size()) - 2.0;
    const double one_minus_r2 = 1.0 - r * r;
    double p = 0.0;
    if (one_minus_r2 > 0) {
        const double t = r * std::sqrt(df / one_minus_r2);
        boost::math::students_t dist(df);
        p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
    }
    return {r, floor_p(p), TestMethod::PearsonT};
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw Error(ErrorCode::InvalidArgument, "mann_whitney_u: both samples must be non-empty");
    const std::size_t n1 = a.size();
    const std::size_t n2 = b.size();
    const std::size_t n = n1 + n2;

    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = midranks(pooled);
    const double rank_sum_a = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n1), 0.0);
    const double u = rank_sum_a - static_cast<double>(n1 * (n1 + 1)) / 2.0;
    const double mu = static_cast<double>(n1 * n2) / 2.0;

    std::map<double, std::size_t> tie_groups;
    for (double v : pooled) ++tie_groups[v];
    const bool has_ties = tie_groups.size() < n;

    if (n <= kExactMannWhitneyMaxN && !has_ties) {
        const auto dist = u_distribution(n1, n2);
        const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
        const double observed = std::fabs(u - mu);
        double extreme = 0;
        for (std::size_t k = 0; k < dist.size(); ++k) {
            if (std::fabs(static_cast<double>(k) - mu) >= observed - 1e-9) extreme += dist[k];
        }
        return {u, floor_p(extreme / total), TestMethod::MannWhitneyExact};
    }

    double tie_term = 0;
    for (const auto& [value, t] : tie_groups) {
        const double td = static_cast<double>(t);
        tie_term += td * td * td - td;
    }
    const double nd = static_cast<double>(n);
    const double variance =
        static_cast<double>(n1 * n2) / 12.0 * ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
    double p = 1.0;
    if (variance > 0) {
        const double z = std::max(0.0, std::fabs(u - mu) - 0.5) / std::sqrt(variance);
        p = std::erfc(z / std::sqrt(2.0));
    }
    return {u, floor_p(p), TestMethod::MannWhitneyNormalApprox};
}

std::size_t required_sample_size(std::size_t population, double confidence, double margin) {
    if (population == 0) throw Error(ErrorCode::InvalidArgument, "population must be positive");
    if (!(confidence > 0 && confidence < 1)) throw Error(ErrorCode::InvalidArgument, "confidence must be in (0, 1)");
    if (!(margin > 0 && margin <= 1)) throw Error(ErrorCode::InvalidArgument, "margin must be in (0, 1]");
    const double z = boost::math::quantile(boost::math::normal(), 1.0 - (1.0 - confidence) / 2.0);
    const double n0 = z * z * 0.25 / (margin * margin);
    const double n = n0 / (1.0 + (n0 - 1.0) / static_cast<double>(population));
    // Guard against representation noise pushing an exact integer up by one.
    const auto rounded = static_cast<std::size_t>(std::ceil(n - 1e-9));
    return std::max<std::size_t>(1, rounded);
}

std::vector<ClassCorrelation> correlate_changes_with_length(
    const std::vector<std::vector<TransitionRecord>>& per_session_transitions) {
    std::vector<double> lengths;
    std::map<TransitionClass, std::vector<double>> shares;
    for (const auto& transitions : per_session_transitions) {
        if (transitions.empty()) continue;
        lengths.push_back(static_cast<double>(transitions.size() + 1));
        std::map<TransitionClass, std::size_t> counts;
        for (const auto& t : transitions) ++counts[t.cls];
        for (auto cls : kTransitionClasses) {
            shares[cls].push_back(100.0 * static_cast<double>(counts[cls]) / static_cast<double>(transitions.size()));
        }
    }
    if (lengths.size() < 3) {
        throw Error(ErrorCode::Statistics, "correlation needs at least 3 sessions with transitions");
    }
    std::vector<ClassCorrelation> out;
    for (auto cls : kTransitionClasses) {
        out.push_back({cls, pearson(shares[cls], lengths), lengths.size()});
    }
    return out;
}

DiffComparison compare_diff_sizes(std::span<const double> successful, std::span<const double> unsuccessful) {
    if (successful.empty() || unsuccessful.empty()) {
        throw Error(ErrorCode::Statistics, "both transition groups must be non-empty");
    }
    DiffComparison c;
    c.n_success = successful.size();
    c.n_failure = unsuccessful.size();
    c.mean_success = mean_of(successful);
    c.mean_failure = mean_of(unsuccessful);
    c.mean_overall = (c.mean_success * static_cast<double>(c.n_success) +
                      c.mean_failure * static_cast<double>(c.n_failure)) /
                     static_cast<double>(c.n_success + c.n_failure);
    c.test = mann_whitney_u(successful, unsuccessful);
    return c;
}

std::vector<SeriesRow> words_constraints_series(const std::vector<FormalizedSession>& corpus, std::string_view task_id) {
    struct Acc {
        double words = 0;
        double atoms = 0;
        std::size_t n = 0;
    };
    std::vector<Acc> acc;
    for (const auto& fs : corpus) {
        if (fs.session.task_id != task_id) continue;
        const auto& prompts = fs.session.prompts;
        if (acc.size() < prompts.size()) acc.resize(prompts.size());
        for (std::size_t k = 0; k < prompts.size(); ++k) {
            acc[k].words += static_cast<double>(prompts[k].word_count);
            acc[k].atoms += static_cast<double>(fs.formalizations[k].atoms.size());
            ++acc[k].n;
        }
    }
    std::vector<SeriesRow> rows;
    for (std::size_t k = 0; k < acc.size(); ++k) {
        const double n = static_cast<double>(acc[k].n);
        rows.push_back({k + 1, acc[k].words / n, acc[k].atoms / n, acc[k].n});
    }
    return rows;
}

}  // namespace p2c
