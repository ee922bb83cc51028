#ifndef BAYESTREE_TESTKIT_HPP
#define BAYESTREE_TESTKIT_HPP

// Ground truth for the recursion: brute-force skeleton enumeration on
// shallow trees, a finite-depth reference recursion, and samplers for a few
// prototype densities used in convergence experiments.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bayestree/config.hpp"
#include "bayestree/model.hpp"

namespace bayestree::testkit {

constexpr int kMaxOracleDepth = 4;

// A skeleton over depth <= m in preorder: 1 = split, 0 = uniform leaf.
// Nodes at depth m are forced leaves and take no entry.
using Skeleton = std::vector<char>;

std::vector<Skeleton> enumerate_skeletons(int m);

namespace detail {

// Counts of data below the node at `pos`, consuming the skeleton in preorder.
template <class Real>
void accumulate_skeleton(const Skeleton& sk, std::size_t& pos, std::vector<double> cell,
                         int depth, int m, const Real& split_prior, Real& prior, Real& lik) {
    if (depth == m)
        return;
    const bool split = sk[pos++] != 0;
    if (!split) {
        prior *= Real(1) - split_prior;
        return;
    }
    prior *= split_prior;
    std::vector<double> left, right;
    for (double x : cell) {
        if (x < 0.5)
            left.push_back(2.0 * x);
        else
            right.push_back(2.0 * x - 1.0);
    }
    // 1 / w(n0, n1) = 2^n n0! n1! / (n + 1)!
    const std::size_t n0 = left.size(), n1 = right.size(), n = n0 + n1;
    Real inv_w(1);
    for (std::size_t i = 0; i < n; ++i)
        inv_w *= Real(2);
    for (std::size_t i = 2; i <= n0; ++i)
        inv_w *= Real(static_cast<long>(i));
    for (std::size_t i = 2; i <= n1; ++i)
        inv_w *= Real(static_cast<long>(i));
    for (std::size_t i = 2; i <= n + 1; ++i)
        inv_w /= Real(static_cast<long>(i));
    lik *= inv_w;
    accumulate_skeleton(sk, pos, std::move(left), depth + 1, m, split_prior, prior, lik);
    accumulate_skeleton(sk, pos, std::move(right), depth + 1, m, split_prior, prior, lik);
}

} // namespace detail

/// Evidence of data in [0,1) under the depth-m tree mixture, by summing
/// prior(skeleton) * likelihood(data | skeleton) over every skeleton.
/// Real may be an exact rational type.
template <class Real>
Real oracle_evidence_as(std::span<const double> data, int m, const Real& split_prior) {
    if (m < 0 || m > kMaxOracleDepth)
        throw ArgumentError("oracle_evidence: depth must lie in [0, " +
                            std::to_string(kMaxOracleDepth) + "]");
    for (double x : data)
        if (!(x >= 0.0 && x < 1.0))
            throw ArgumentError("oracle_evidence: data outside [0,1)");
    Real total(0);
    for (const Skeleton& sk : enumerate_skeletons(m)) {
        Real prior(1), lik(1);
        std::size_t pos = 0;
        detail::accumulate_skeleton(sk, pos, std::vector<double>(data.begin(), data.end()), 0, m,
                                    split_prior, prior, lik);
        total += prior * lik;
    }
    return total;
}

double oracle_evidence(std::span<const double> data, int m, const ModelConfig& config);

/// The recursion stopped unconditionally at depth m, where every cell is a
/// uniform leaf with p = 1, zero height and dimension zero.
NodeSummary finite_depth_evaluate(std::span<const double> data, int m,
                                  const QueryPosition& query, const ModelConfig& config);

struct TestDistribution {
    std::string name;
    std::function<double(double)> density;
    std::function<double(double)> cdf;
    std::function<double(double)> inverse_cdf;
};

// "singular"  (1/2)(1-x)^(-1/2)
// "linear"    2x
// "beta22"    6x(1-x)
// "step"      2 on [0,1/2), 0 elsewhere
// "step4"     0.4, 1.6, 1.2, 0.8 on the four quarters
TestDistribution test_distribution(const std::string& name);
std::vector<std::string> test_distribution_names();

// n sorted draws by inverse-CDF sampling; deterministic in seed.
std::vector<double> sample_test_distribution(const TestDistribution& dist, std::int64_t n,
                                             std::uint64_t seed);

struct ProfilePoint {
    double x = 0.0;
    double density = 0.0;   // posterior predictive
    double truth = 0.0;
    double height = 0.0;    // E[h(x) | D]
};

struct ExperimentRow {
    std::int64_t n = 0;
    double mean_abs_log_ratio = 0.0;
    double log_evidence = 0.0;
    double expected_dim = 0.0;
    DimensionDistribution dims;
    double avg_height = 0.0;
    std::int64_t node_count = 0;
    std::vector<ProfilePoint> profile;
};

struct ExperimentReport {
    std::string distribution;
    std::vector<ExperimentRow> rows;

    bool error_strictly_decreasing() const;
};

/// Fits each sample size and compares the predictive density with the true
/// one on the grid midpoints (i + 1/2) / grid inside [0.01, 0.99], skipping
/// points where the true density vanishes. Error is mean |ln(p_hat / q)|.
ExperimentReport consistency_experiment(const TestDistribution& dist,
                                        std::span<const std::int64_t> sizes, int grid,
                                        const ModelConfig& config, std::uint64_t seed);

} // namespace bayestree::testkit

#endif
