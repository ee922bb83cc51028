#include <cmath>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <gtest/gtest.h>

#include "bayestree/testkit.hpp"
#include "test_support.hpp"

using namespace bayestree;
using boost::multiprecision::cpp_rational;

namespace {

// Exact finite-depth recursion over rationals, written independently of the
// library: p = (1 - b) + b p_L p_R / w below depth m, p = 1 at depth m.
cpp_rational rational_recursion(const std::vector<double>& cell, int depth, int m,
                                const cpp_rational& b) {
    if (depth == m)
        return 1;
    std::vector<double> left, right;
    for (double x : cell)
        (x < 0.5 ? left : right).push_back(x < 0.5 ? 2 * x : 2 * x - 1);
    const long n0 = static_cast<long>(left.size()), n1 = static_cast<long>(right.size());
    // w = 2^-n (n + 1)! / (n0! n1!)
    cpp_rational w = 1;
    for (long i = 2; i <= n0 + n1 + 1; ++i)
        w *= i;
    for (long i = 2; i <= n0; ++i)
        w /= i;
    for (long i = 2; i <= n1; ++i)
        w /= i;
    for (long i = 0; i < n0 + n1; ++i)
        w /= 2;
    return (1 - b) + b * rational_recursion(left, depth + 1, m, b) *
                         rational_recursion(right, depth + 1, m, b) / w;
}

double chi_squared_p_value(const std::vector<double>& xs, const testkit::TestDistribution& dist,
                           int bins) {
    std::vector<double> observed(static_cast<std::size_t>(bins), 0.0);
    for (double x : xs)
        observed[static_cast<std::size_t>(std::min(bins - 1, static_cast<int>(x * bins)))] += 1.0;
    double stat = 0.0;
    int dof = -1;
    for (int i = 0; i < bins; ++i) {
        const double expected =
            static_cast<double>(xs.size()) * (dist.cdf((i + 1.0) / bins) - dist.cdf(double(i) / bins));
        if (expected <= 0.0) {
            EXPECT_EQ(observed[static_cast<std::size_t>(i)], 0.0);
            continue;
        }
        const double d = observed[static_cast<std::size_t>(i)] - expected;
        stat += d * d / expected;
        ++dof;
    }
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), stat));
}

} // namespace

TEST(Skeletons, CountsFollowRecurrence) {
    const std::size_t expected[] = {1, 2, 5, 26, 677};
    for (int m = 0; m <= 4; ++m)
        EXPECT_EQ(testkit::enumerate_skeletons(m).size(), expected[m]);
}

TEST(Oracle, HandValues) {
    const std::vector<double> pair{0.2, 0.7};
    for (int m = 1; m <= 4; ++m)
        EXPECT_EQ(testkit::oracle_evidence_as<cpp_rational>(pair, m, cpp_rational(1, 2)),
                  cpp_rational(5, 6));
    const std::vector<double> close{0.1, 0.3};
    for (int m = 2; m <= 4; ++m)
        EXPECT_EQ(testkit::oracle_evidence_as<cpp_rational>(close, m, cpp_rational(1, 2)),
                  cpp_rational(19, 18));
    for (int m = 0; m <= 4; ++m) {
        EXPECT_EQ(testkit::oracle_evidence({}, m, {}), 1.0);
        const double one[] = {0.37};
        EXPECT_EQ(testkit::oracle_evidence(one, m, {}), 1.0);
    }
}

TEST(Oracle, RejectsDeepTrees) {
    EXPECT_THROW(testkit::oracle_evidence({}, 5, {}), ArgumentError);
    EXPECT_THROW(testkit::oracle_evidence({}, -1, {}), ArgumentError);
}

TEST(Oracle, MatchesFiniteRecursionOnRandomData) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const auto data = test::uniform_points(static_cast<std::size_t>(trial % 7), 100 + trial);
        ModelConfig c;
        c.split_prior = trial % 3 == 0 ? 0.25 : 0.5;
        for (int m = 0; m <= 4; ++m) {
            const double oracle = testkit::oracle_evidence(data, m, c);
            const double rec = std::exp(
                testkit::finite_depth_evaluate(data, m, QueryPosition::absent(), c).log_evidence);
            EXPECT_LE(test::rel_diff(rec, oracle), 1e-12) << "trial " << trial << " m " << m;
        }
    }
}

TEST(Oracle, ExhaustiveExactOnDyadicGrid) {
    // Points k/8 + 1/16 with multiplicity, every multiset of size <= 5.
    std::vector<double> grid;
    for (int k = 0; k < 8; ++k)
        grid.push_back(k / 8.0 + 1.0 / 16.0);
    const cpp_rational half(1, 2), third(1, 3);
    int checked = 0;
    std::vector<int> pick;
    std::function<void(int)> walk = [&](int from) {
        std::vector<double> data;
        for (int i : pick)
            data.push_back(grid[static_cast<std::size_t>(i)]);
        for (int m = 0; m <= 3; ++m) {
            for (const cpp_rational& b : {half, third}) {
                const cpp_rational exact = rational_recursion(data, 0, m, b);
                ASSERT_EQ(testkit::oracle_evidence_as<cpp_rational>(data, m, b), exact);
                ModelConfig c;
                c.split_prior = static_cast<double>(b);
                const double le =
                    testkit::finite_depth_evaluate(data, m, QueryPosition::absent(), c).log_evidence;
                EXPECT_LE(test::rel_diff(std::exp(le), static_cast<double>(exact)), 1e-13);
            }
        }
        ++checked;
        if (pick.size() == 5)
            return;
        for (int i = from; i < 8; ++i) {
            pick.push_back(i);
            walk(i);
            pick.pop_back();
        }
    };
    walk(0);
    EXPECT_EQ(checked, 1287); // C(13, 5): multisets of size <= 5 from 8 values
}

TEST(FiniteDepth, ZeroDepthIsUniform) {
    const auto data = test::uniform_points(20, 3);
    const auto s = testkit::finite_depth_evaluate(data, 0, QueryPosition::inside(0.4), {});
    EXPECT_EQ(s.log_evidence, 0.0);
    EXPECT_EQ(s.height_at_query, 0.0);
    EXPECT_EQ(s.dims.probs[0], 1.0);
}

TEST(FiniteDepth, PriorHeight) {
    for (int m = 0; m <= 30; ++m) {
        const auto s = testkit::finite_depth_evaluate({}, m, QueryPosition::inside(0.3), {});
        EXPECT_NEAR(s.height_at_query, 1.0 - std::ldexp(1.0, -m), 1e-15);
        EXPECT_EQ(s.log_evidence, 0.0);
    }
}

TEST(FiniteDepth, EvidenceConstantBeyondSeparation) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto data = test::uniform_points(2 + seed % 9, 200 + seed);
        const int sep = test::separation_depth(data);
        const double infinite = evaluate(data, QueryPosition::absent(), {}).log_evidence;
        for (int m = sep; m <= sep + 6; ++m)
            EXPECT_EQ(testkit::finite_depth_evaluate(data, m, QueryPosition::absent(), {}).log_evidence,
                      infinite)
                << "seed " << seed << " m " << m;
    }
}

TEST(FiniteDepth, ApproachesInfiniteHeights) {
    const auto data = test::uniform_points(10, 7);
    const auto inf = evaluate(data, QueryPosition::inside(0.61), {});
    const auto deep = testkit::finite_depth_evaluate(data, 60, QueryPosition::inside(0.61), {});
    EXPECT_NEAR(deep.height_at_query, inf.height_at_query, 1e-12);
    EXPECT_NEAR(deep.avg_height, inf.avg_height, 1e-12);
}

TEST(Distributions, AllNamesResolve) {
    for (const auto& name : testkit::test_distribution_names()) {
        const auto d = testkit::test_distribution(name);
        EXPECT_EQ(d.name, name);
        EXPECT_NEAR(d.cdf(1.0), 1.0, 1e-15);
        EXPECT_EQ(d.cdf(0.0), 0.0);
        // density integrates to the cdf increment
        double acc = 0.0;
        const int k = 200000;
        for (int i = 0; i < k; ++i)
            acc += d.density((i + 0.5) / k) / k;
        EXPECT_NEAR(acc, 1.0, 5e-3) << name;
    }
    EXPECT_THROW(testkit::test_distribution("cauchy"), ArgumentError);
}

TEST(Sampler, ChiSquaredGoodnessOfFit) {
    for (const auto& name : testkit::test_distribution_names()) {
        const auto d = testkit::test_distribution(name);
        const auto xs = testkit::sample_test_distribution(d, 100000, 17);
        EXPECT_GT(chi_squared_p_value(xs, d, 64), 0.001) << name;
    }
}

TEST(Sampler, StepMean) {
    const auto xs = testkit::sample_test_distribution(testkit::test_distribution("step"), 100000, 3);
    double mean = 0.0;
    for (double x : xs)
        mean += x / static_cast<double>(xs.size());
    // sd of the mean is (1 / sqrt(48)) / sqrt(n)
    EXPECT_NEAR(mean, 0.25, 5.0 * 0.1443 / std::sqrt(1e5));
    EXPECT_LT(xs.back(), 0.5);
}

TEST(Sampler, DeterministicSortedInRange) {
    const auto d = testkit::test_distribution("singular");
    const auto a = testkit::sample_test_distribution(d, 5000, 9);
    const auto b = testkit::sample_test_distribution(d, 5000, 9);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, testkit::sample_test_distribution(d, 5000, 10));
    EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
    EXPECT_GE(a.front(), 0.0);
    EXPECT_LT(a.back(), 1.0);
}

TEST(Experiment, ReportShape) {
    const std::int64_t sizes[] = {50, 500};
    const auto r = testkit::consistency_experiment(testkit::test_distribution("linear"), sizes, 100, {}, 4);
    ASSERT_EQ(r.rows.size(), 2u);
    EXPECT_EQ(r.distribution, "linear");
    for (const auto& row : r.rows) {
        EXPECT_EQ(row.profile.size(), 100u);
        EXPECT_GT(row.mean_abs_log_ratio, 0.0);
        EXPECT_GE(row.expected_dim, 0.0);
        EXPECT_GT(row.node_count, 0);
        for (const auto& p : row.profile) {
            EXPECT_GT(p.density, 0.0);
            EXPECT_GT(p.height, 0.0);
        }
    }
    EXPECT_EQ(r.rows[0].n, 50);
}

TEST(Experiment, Deterministic) {
    const std::int64_t sizes[] = {100, 300};
    const auto d = testkit::test_distribution("beta22");
    const auto a = testkit::consistency_experiment(d, sizes, 50, {}, 11);
    const auto b = testkit::consistency_experiment(d, sizes, 50, {}, 11);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i].mean_abs_log_ratio, b.rows[i].mean_abs_log_ratio);
        EXPECT_EQ(a.rows[i].log_evidence, b.rows[i].log_evidence);
    }
}

TEST(Experiment, RejectsBadArguments) {
    const auto d = testkit::test_distribution("linear");
    const std::int64_t down[] = {100, 50};
    EXPECT_THROW(testkit::consistency_experiment(d, down, 10, {}, 1), ArgumentError);
    const std::int64_t ok[] = {10};
    EXPECT_THROW(testkit::consistency_experiment(d, ok, 1, {}, 1), ArgumentError);
}

TEST(Experiment, ErrorShrinksForSmoothDensity) {
    const std::int64_t sizes[] = {100, 1000, 10000};
    const auto r = testkit::consistency_experiment(testkit::test_distribution("beta22"), sizes, 200, {}, 5);
    EXPECT_TRUE(r.error_strictly_decreasing());
}
