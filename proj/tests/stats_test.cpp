#include "p2c/error.hpp"
#include "p2c/stats.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace p2c;
using namespace p2c::testing;

namespace {

// Two-sided tail of Student's t by Simpson integration of the density.
double t_two_sided_tail(double t, double df) {
    const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
    auto density = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
    // Integrate the central part and take the complement.
    const double a = std::fabs(t);
    const int n = 20000;
    const double h = a / n;
    double s = density(0) + density(a);
    for (int i = 1; i < n; ++i) s += density(i * h) * (i % 2 ? 4 : 2);
    return 1.0 - 2.0 * s * h / 3.0;
}

double direct_r(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

double pair_count_u(const std::vector<double>& a, const std::vector<double>& b) {
    double u = 0;
    for (double x : a) {
        for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
    }
    return u;
}

// Exact two-sided p by listing every assignment of the pooled values to the
// first sample.
double enumerated_p(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::size_t n = pooled.size();
    const double mu = static_cast<double>(a.size() * b.size()) / 2.0;
    const double observed = std::fabs(pair_count_u(a, b) - mu);
    std::size_t hits = 0, total = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != a.size()) continue;
        std::vector<double> x, y;
        for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? x : y).push_back(pooled[i]);
        ++total;
        if (std::fabs(pair_count_u(x, y) - mu) >= observed - 1e-9) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

std::vector<double> distinct_values(std::mt19937& rng, std::size_t n) {
    std::vector<double> v(40);
    std::iota(v.begin(), v.end(), 1.0);
    std::shuffle(v.begin(), v.end(), rng);
    v.resize(n);
    return v;
}

}  // namespace

TEST_CASE("quantiles interpolate between order statistics") {
    const std::vector<double> v = {1, 2, 3, 4};
    CHECK(quantile_sorted(v, 0.25) == doctest::Approx(1.75));
    CHECK(quantile_sorted(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile_sorted(v, 0.75) == doctest::Approx(3.25));
    CHECK(quantile_sorted(v, 0.0) == 1);
    CHECK(quantile_sorted(v, 1.0) == 4);
    CHECK_THROWS_AS(quantile_sorted(std::vector<double>{}, 0.5), Error);
}

TEST_CASE("summary row uses the sample standard deviation") {
    const auto row = summarize_values("1", 3, {4, 1, 7, 4});
    CHECK(row.mean == doctest::Approx(4.0));
    CHECK(row.std == doctest::Approx(std::sqrt(18.0 / 3.0)));
    CHECK(row.min == 1);
    CHECK(row.q1 == doctest::Approx(3.25));
    CHECK(row.median == doctest::Approx(4.0));
    CHECK(row.q3 == doctest::Approx(4.75));
    CHECK(row.max == 7);
    CHECK(summarize_values("1", 1, {5}).std == 0);
    CHECK_THROWS_AS(summarize_values("1", 0, {}), Error);
}

TEST_CASE("summary over the shipped corpus keeps the five-number order") {
    const auto corpus = shipped_corpus();
    for (const char* task : {"1", "2", "3"}) {
        const auto row = summarize_constraints(corpus, task);
        CHECK(row.min <= row.q1);
        CHECK(row.q1 <= row.median);
        CHECK(row.median <= row.q3);
        CHECK(row.q3 <= row.max);
    }
    CHECK(summarize_constraints(corpus, "1").n_users == 9);
    CHECK(summarize_constraints(corpus, "3").min == 0);  // a prompt with an empty conjunction
}

TEST_CASE("pearson agrees with the direct formula and an integrated t tail") {
    std::mt19937 rng(5);
    std::normal_distribution<double> noise(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 3 + static_cast<std::size_t>(trial) % 48;
        const double slope = std::uniform_real_distribution<double>(-2, 2)(rng);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = noise(rng) * 10;
            y[i] = slope * x[i] + noise(rng) * 10;
        }
        const auto r = pearson(x, y);
        const double want = direct_r(x, y);
        CHECK(std::fabs(r.statistic - want) <= 1e-10 * std::max(1.0, std::fabs(want)));
        const double df = static_cast<double>(n) - 2;
        const double t = want * std::sqrt(df / (1 - want * want));
        const double p = std::max(t_two_sided_tail(t, df), kPValueFloor);
        CHECK(r.p_value == doctest::Approx(p).epsilon(1e-6).scale(1.0));
        CHECK(r.method == TestMethod::PearsonT);
    }
}

TEST_CASE("pearson edge cases") {
    const std::vector<double> x = {1, 2, 3, 4};
    CHECK(pearson(x, std::vector<double>{2, 4, 6, 8}).statistic == doctest::Approx(1.0));
    CHECK(pearson(x, std::vector<double>{2, 4, 6, 8}).p_value == kPValueFloor);
    CHECK(pearson(x, std::vector<double>{8, 6, 4, 2}).statistic == doctest::Approx(-1.0));
    CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 1, 1, 1}), Error);
    CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
    CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2, 3}), Error);
}

TEST_CASE("Mann-Whitney U is complementary") {
    std::mt19937 rng(17);
    std::uniform_int_distribution<int> value(0, 6);  // plenty of ties
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> a(1 + trial % 9), b(1 + (trial / 9) % 11);
        for (auto& v : a) v = value(rng);
        for (auto& v : b) v = value(rng);
        const auto ab = mann_whitney_u(a, b);
        const auto ba = mann_whitney_u(b, a);
        CHECK(ab.statistic + ba.statistic == doctest::Approx(static_cast<double>(a.size() * b.size())));
        CHECK(ab.statistic == doctest::Approx(pair_count_u(a, b)));
        CHECK(ab.p_value == doctest::Approx(ba.p_value));
    }
}

TEST_CASE("exact Mann-Whitney p matches full enumeration up to ten observations") {
    std::mt19937 rng(23);
    for (std::size_t n1 = 1; n1 <= 9; ++n1) {
        for (std::size_t n2 = 1; n1 + n2 <= 10; ++n2) {
            for (int rep = 0; rep < 4; ++rep) {
                auto pooled = distinct_values(rng, n1 + n2);
                std::vector<double> a(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(n1));
                std::vector<double> b(pooled.begin() + static_cast<std::ptrdiff_t>(n1), pooled.end());
                const auto r = mann_whitney_u(a, b);
                CHECK(r.method == TestMethod::MannWhitneyExact);
                CHECK(r.p_value == doctest::Approx(enumerated_p(a, b)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("exact and normal approximation agree at 6 + 6") {
    std::mt19937 rng(31);
    for (int rep = 0; rep < 50; ++rep) {
        auto pooled = distinct_values(rng, 12);
        std::vector<double> a(pooled.begin(), pooled.begin() + 6), b(pooled.begin() + 6, pooled.end());
        const auto r = mann_whitney_u(a, b);
        CHECK(r.method == TestMethod::MannWhitneyExact);
        const double mu = 18, sigma = std::sqrt(36.0 * 13.0 / 12.0);
        const double z = std::max(0.0, std::fabs(r.statistic - mu) - 0.5) / sigma;
        CHECK(std::fabs(r.p_value - std::erfc(z / std::sqrt(2.0))) < 0.05);
    }
}

TEST_CASE("normal approximation with ties") {
    // Pooled values 1,1,2,2,2,3,4,5,5,6,7,8,9 -> tie groups of 2, 3 and 2.
    const std::vector<double> a = {1, 2, 2, 4, 5, 6};
    const std::vector<double> b = {1, 2, 3, 5, 7, 8, 9};
    const auto r = mann_whitney_u(a, b);
    CHECK(r.method == TestMethod::MannWhitneyNormalApprox);
    CHECK(r.statistic == doctest::Approx(pair_count_u(a, b)));
    const double n = 13, tie = (8 - 2) + (27 - 3) + (8 - 2);
    const double var = 6.0 * 7.0 / 12.0 * ((n + 1) - tie / (n * (n - 1)));
    const double z = (std::fabs(r.statistic - 21.0) - 0.5) / std::sqrt(var);
    CHECK(r.p_value == doctest::Approx(std::erfc(z / std::sqrt(2.0))));

    const std::vector<double> same = {3, 3, 3};
    CHECK(mann_whitney_u(same, same).p_value == 1.0);
    CHECK_THROWS_AS(mann_whitney_u(std::vector<double>{}, same), Error);
}

TEST_CASE("p-values are floored") {
    std::vector<double> a(200), b(200);
    std::iota(a.begin(), a.end(), 0.0);
    std::iota(b.begin(), b.end(), 1000.0);
    CHECK(mann_whitney_u(a, b).p_value == kPValueFloor);
}

TEST_CASE("required sample size") {
    CHECK(required_sample_size(1872, 0.95, 0.06) == 234);
    const double z95 = 1.959963984540054;
    for (std::size_t population : {10u, 100u, 1000u, 5000u, 100000u}) {
        for (double margin : {0.03, 0.05, 0.1, 0.5}) {
            const double n0 = z95 * z95 * 0.25 / (margin * margin);
            const double n = n0 / (1 + (n0 - 1) / static_cast<double>(population));
            const auto got = required_sample_size(population, 0.95, margin);
            CHECK(static_cast<double>(got) >= n - 1e-9);
            CHECK(static_cast<double>(got) < n + 1);
            CHECK(got <= population);
        }
    }
    CHECK(required_sample_size(10, 0.95, 0.5) <= 10);
    CHECK_THROWS_AS(required_sample_size(0, 0.95, 0.06), Error);
    CHECK_THROWS_AS(required_sample_size(10, 1.0, 0.06), Error);
    CHECK_THROWS_AS(required_sample_size(10, 0.95, 0.0), Error);
}

TEST_CASE("change-share correlation") {
    auto t = [](TransitionClass c) {
        TransitionRecord r;
        r.cls = c;
        return r;
    };
    using C = TransitionClass;
    std::vector<std::vector<TransitionRecord>> sessions = {
        {t(C::AddingConstraints)},
        {t(C::AddingConstraints), t(C::Rewording)},
        {t(C::ModifyingConstraints), t(C::Resubmission), t(C::Rewording)},
        {t(C::ModifyingConstraints), t(C::Resubmission), t(C::Rewording), t(C::Resubmission)},
        {},
    };
    const auto rows = correlate_changes_with_length(sessions);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].cls == C::AddingConstraints);
    CHECK(rows[0].sessions == 4);
    const std::vector<double> lengths = {2, 3, 4, 5};
    const std::vector<double> adding = {100, 50, 0, 0};
    CHECK(rows[0].result.statistic == doctest::Approx(direct_r(adding, lengths)));

    sessions.resize(2);
    CHECK_THROWS_AS(correlate_changes_with_length(sessions), Error);
}

TEST_CASE("diff-size comparison") {
    const std::vector<double> s = {0, 1, 1, 2};
    const std::vector<double> f = {2, 3};
    const auto c = compare_diff_sizes(s, f);
    CHECK(c.mean_success == doctest::Approx(1.0));
    CHECK(c.mean_failure == doctest::Approx(2.5));
    CHECK(c.mean_overall == doctest::Approx(1.5));
    CHECK(c.test.statistic == doctest::Approx(pair_count_u(s, f)));
    CHECK_THROWS_AS(compare_diff_sizes(s, std::vector<double>{}), Error);
}

TEST_CASE("words and constraints series") {
    const auto corpus = shipped_corpus();
    const auto rows = words_constraints_series(corpus, "2");
    REQUIRE(!rows.empty());
    CHECK(rows[0].participants == 7);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].participants <= rows[i - 1].participants);
}
