#include "bayestree/testkit.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "bayestree/tree.hpp"

namespace bayestree::testkit {

std::vector<Skeleton> enumerate_skeletons(int m) {
    if (m < 0)
        throw ArgumentError("enumerate_skeletons: negative depth");
    if (m == 0)
        return {Skeleton{}};
    const std::vector<Skeleton> sub = enumerate_skeletons(m - 1);
    std::vector<Skeleton> out;
    out.reserve(1 + sub.size() * sub.size());
    out.push_back(Skeleton{0});
    for (const Skeleton& l : sub) {
        for (const Skeleton& r : sub) {
            Skeleton s{1};
            s.insert(s.end(), l.begin(), l.end());
            s.insert(s.end(), r.begin(), r.end());
            out.push_back(std::move(s));
        }
    }
    return out;
}

double oracle_evidence(std::span<const double> data, int m, const ModelConfig& config) {
    config.validate();
    return static_cast<double>(
        oracle_evidence_as<long double>(data, m, static_cast<long double>(config.split_prior)));
}

namespace {

struct FiniteRecursion {
    int m;
    const ModelConfig& config;
    // Empty cells away from the query depend on depth only.
    std::vector<std::optional<NodeSummary>> empty_by_depth;

    NodeSummary run(std::span<double> data, const QueryPosition& query, int depth) {
        if (depth >= m)
            return finite_leaf_summary(config);
        const bool shareable = data.empty() && !query.is_inside();
        if (shareable && empty_by_depth[depth])
            return *empty_by_depth[depth];

        const auto mid = static_cast<std::size_t>(
            std::lower_bound(data.begin(), data.end(), 0.5) - data.begin());
        std::span<double> left = data.first(mid);
        std::span<double> right = data.subspan(mid);
        for (double& x : left)
            x = 2.0 * x;
        for (double& x : right)
            x = 2.0 * x - 1.0;
        const NodeSummary l = run(left, query.child(0), depth + 1);
        const NodeSummary r = run(right, query.child(1), depth + 1);
        NodeSummary s = combine(l, r,
                                SplitCounts{static_cast<std::int64_t>(left.size()),
                                            static_cast<std::int64_t>(right.size())},
                                query, config);
        if (shareable)
            empty_by_depth[depth] = s;
        return s;
    }
};

double clamp_unit(double x) { return std::clamp(x, 0.0, std::nextafter(1.0, 0.0)); }

// Monotone inverse by bisection.
double invert(const std::function<double(double)>& cdf, double u) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 64; ++i) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < u ? lo : hi) = mid;
    }
    return lo;
}

double piecewise_cdf(const std::vector<double>& heights, double x) {
    const double width = 1.0 / static_cast<double>(heights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < heights.size(); ++i) {
        const double lo = static_cast<double>(i) * width;
        if (x <= lo)
            break;
        acc += heights[i] * std::min(x - lo, width);
    }
    return std::min(acc, 1.0);
}

double piecewise_density(const std::vector<double>& heights, double x) {
    const auto i = static_cast<std::size_t>(x * static_cast<double>(heights.size()));
    return heights[std::min(i, heights.size() - 1)];
}

} // namespace

NodeSummary finite_depth_evaluate(std::span<const double> data, int m,
                                  const QueryPosition& query, const ModelConfig& config) {
    config.validate();
    if (m < 0)
        throw ArgumentError("finite_depth_evaluate: negative depth");
    std::vector<double> work(data.begin(), data.end());
    for (double x : work)
        if (!(x >= 0.0 && x < 1.0))
            throw ArgumentError("finite_depth_evaluate: data outside [0,1)");
    std::sort(work.begin(), work.end());
    FiniteRecursion rec{m, config, std::vector<std::optional<NodeSummary>>(static_cast<std::size_t>(m))};
    return rec.run(work, query, 0);
}

TestDistribution test_distribution(const std::string& name) {
    if (name == "singular") {
        return {name, [](double x) { return 0.5 / std::sqrt(1.0 - x); },
                [](double x) { return 1.0 - std::sqrt(1.0 - x); },
                [](double u) { return 1.0 - (1.0 - u) * (1.0 - u); }};
    }
    if (name == "linear") {
        return {name, [](double x) { return 2.0 * x; }, [](double x) { return x * x; },
                [](double u) { return std::sqrt(u); }};
    }
    if (name == "beta22") {
        auto cdf = [](double x) { return x * x * (3.0 - 2.0 * x); };
        return {name, [](double x) { return 6.0 * x * (1.0 - x); }, cdf,
                [cdf](double u) { return invert(cdf, u); }};
    }
    if (name == "step") {
        return {name, [](double x) { return x < 0.5 ? 2.0 : 0.0; },
                [](double x) { return std::min(2.0 * x, 1.0); }, [](double u) { return 0.5 * u; }};
    }
    if (name == "step4") {
        const std::vector<double> heights{0.4, 1.6, 1.2, 0.8};
        auto cdf = [heights](double x) { return piecewise_cdf(heights, x); };
        return {name, [heights](double x) { return piecewise_density(heights, x); }, cdf,
                [cdf](double u) { return invert(cdf, u); }};
    }
    throw ArgumentError("unknown test distribution '" + name + "'");
}

std::vector<std::string> test_distribution_names() {
    return {"singular", "linear", "beta22", "step", "step4"};
}

std::vector<double> sample_test_distribution(const TestDistribution& dist, std::int64_t n,
                                             std::uint64_t seed) {
    if (n < 0)
        throw ArgumentError("sample_test_distribution: negative size");
    std::mt19937_64 rng(seed);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (double& x : out)
        x = clamp_unit(dist.inverse_cdf(uniform01(rng)));
    std::sort(out.begin(), out.end());
    return out;
}

bool ExperimentReport::error_strictly_decreasing() const {
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (!(rows[i].mean_abs_log_ratio < rows[i - 1].mean_abs_log_ratio))
            return false;
    return true;
}

ExperimentReport consistency_experiment(const TestDistribution& dist,
                                        std::span<const std::int64_t> sizes, int grid,
                                        const ModelConfig& config, std::uint64_t seed) {
    if (grid < 2)
        throw ArgumentError("consistency_experiment: grid must have at least 2 points");
    for (std::size_t i = 1; i < sizes.size(); ++i)
        if (sizes[i] <= sizes[i - 1])
            throw ArgumentError("consistency_experiment: sizes must increase");

    ExperimentReport report;
    report.distribution = dist.name;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        const std::int64_t n = sizes[k];
        const auto data = sample_test_distribution(dist, n, seed + 0x9e3779b97f4a7c15ULL * (k + 1));
        const FittedTree tree = build(data, config);

        ExperimentRow row;
        row.n = n;
        row.log_evidence = tree.log_evidence();
        row.dims = tree.root().summary().dims;
        row.expected_dim = row.dims.expected_lower_bound();
        row.avg_height = tree.root().summary().avg_height;
        row.node_count = tree.root().summary().node_count;

        double err = 0.0;
        std::int64_t used = 0;
        for (int i = 0; i < grid; ++i) {
            const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(grid);
            ProfilePoint p{x, predictive_density(tree, x), dist.density(x), height_at(tree, x)};
            if (x >= 0.01 && x <= 0.99 && p.truth > 0.0) {
                err += std::abs(std::log(p.density / p.truth));
                ++used;
            }
            row.profile.push_back(p);
        }
        row.mean_abs_log_ratio = used > 0 ? err / static_cast<double>(used) : 0.0;
        report.rows.push_back(std::move(row));
    }
    return report;
}

} // namespace bayestree::testkit
