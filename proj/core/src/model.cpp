#include "bayestree/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace bayestree {

namespace {

constexpr std::int64_t kLogFactorialTableSize = 4096;

// ln k! for k < kLogFactorialTableSize, summed in extended precision.
const std::array<long double, kLogFactorialTableSize>& log_factorial_table() {
    static const auto table = [] {
        std::array<long double, kLogFactorialTableSize> t{};
        long double acc = 0.0L;
        t[0] = 0.0L;
        for (std::int64_t k = 1; k < kLogFactorialTableSize; ++k) {
            acc += std::log(static_cast<long double>(k));
            t[k] = acc;
        }
        return t;
    }();
    return table;
}

long double log_factorial_ld(std::int64_t n) {
    if (n < kLogFactorialTableSize)
        return log_factorial_table()[n];
    // Stirling series; the truncation error is below 1e-25 for n >= 4096.
    const long double x = static_cast<long double>(n);
    const long double inv = 1.0L / x;
    const long double inv2 = inv * inv;
    const long double series =
        inv * (1.0L / 12 - inv2 * (1.0L / 360 - inv2 * (1.0L / 1260 - inv2 / 1680)));
    return x * std::log(x) - x + 0.5L * std::log(2.0L * std::numbers::pi_v<long double> * x) +
           series;
}

} // namespace

double SplitCounts::balance() const {
    return static_cast<double>(n_left) / static_cast<double>(n()) - 0.5;
}

void DimensionDistribution::close_tail() {
    double sum = 0.0;
    for (double p : probs)
        sum += p;
    tail_mass = std::max(0.0, 1.0 - sum);
}

double DimensionDistribution::expected_lower_bound() const {
    double e = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k)
        e += static_cast<double>(k) * probs[k];
    return e + static_cast<double>(probs.size()) * tail_mass;
}

QueryPosition QueryPosition::inside(double residual) {
    if (!(residual >= 0.0 && residual < 1.0))
        throw ArgumentError("query residual must lie in [0,1)");
    return QueryPosition(Status::inside, residual);
}

QueryPosition QueryPosition::child(int bit) const {
    if (status_ != Status::inside)
        return *this;
    const int side = residual_ < 0.5 ? 0 : 1;
    if (side != bit)
        return outside();
    return QueryPosition(Status::inside, side == 0 ? 2.0 * residual_ : 2.0 * residual_ - 1.0);
}

std::vector<double> prior_dim_coeffs(int n, double split_prior) {
    if (n < 1)
        throw ArgumentError("prior_dim_coeffs: N must be positive");
    if (!(split_prior > 0.0 && split_prior <= 0.5))
        throw ArgumentError("prior_dim_coeffs: split_prior must lie in (0, 1/2]");
    std::vector<double> a(static_cast<std::size_t>(n));
    a[0] = 1.0 - split_prior;
    for (int k = 0; k + 1 < n; ++k) {
        double conv = 0.0;
        for (int i = 0; i <= k; ++i)
            conv += a[i] * a[k - i];
        a[k + 1] = split_prior * conv;
    }
    return a;
}

double log_factorial(std::int64_t n) {
    if (n < 0)
        throw ArgumentError("log_factorial of a negative number");
    return static_cast<double>(log_factorial_ld(n));
}

double log_weight(const SplitCounts& counts) {
    const std::int64_t n = counts.n();
    // w(0,0) = w(1,0) = w(0,1) = 1 exactly.
    if (n <= 1)
        return 0.0;
    const long double lw = -static_cast<long double>(n) * std::numbers::ln2_v<long double> +
                           log_factorial_ld(n + 1) - log_factorial_ld(counts.n_left) -
                           log_factorial_ld(counts.n_right);
    return static_cast<double>(lw);
}

NodeSummary leaf_summary(int n, const QueryPosition& query, const ModelConfig& config) {
    if (n < 0 || n > 1)
        throw ArgumentError("leaf_summary requires at most one data point, got " +
                            std::to_string(n));
    const double b = config.split_prior;
    // Fixed point of h = b (1 + h) along any infinite path.
    const double path_height = b / (1.0 - b);

    NodeSummary s;
    s.log_evidence = 0.0;
    s.split_posterior = b;
    s.height_at_query = query.is_inside() ? path_height : 0.0;
    if (n == 0) {
        s.avg_height = path_height;
    } else {
        // Occupied half carries weight 2/3, the empty half 1/3.
        s.avg_height = b * (1.0 + path_height / 3.0) / (1.0 - 2.0 * b / 3.0);
    }
    s.dims.probs = prior_dim_coeffs(config.dim_trunc, b);
    s.dims.close_tail();
    s.node_count = 1;
    return s;
}

NodeSummary finite_leaf_summary(const ModelConfig& config) {
    NodeSummary s;
    s.log_evidence = 0.0;
    s.split_posterior = 0.0;
    s.height_at_query = 0.0;
    s.avg_height = 0.0;
    s.dims.probs.assign(static_cast<std::size_t>(config.dim_trunc), 0.0);
    s.dims.probs[0] = 1.0;
    s.dims.tail_mass = 0.0;
    s.node_count = 1;
    return s;
}

double mix_log_evidence(double t, const ModelConfig& config) {
    // (1 - b) + b * 1 == 1
    if (t == 0.0)
        return 0.0;
    const double b = config.split_prior;
    const double shifted = t + std::log(b / (1.0 - b));
    if (shifted < config.overflow_threshold)
        return std::log(1.0 - b) + std::log1p(std::exp(shifted));
    return t + std::log(b);
}

NodeSummary combine(const NodeSummary& left, const NodeSummary& right,
                    const SplitCounts& counts, const QueryPosition& query,
                    const ModelConfig& config) {
    const double b = config.split_prior;
    const double t = left.log_evidence + right.log_evidence - log_weight(counts);

    NodeSummary s;
    s.log_evidence = mix_log_evidence(t, config);
    const double g = 1.0 - (1.0 - b) * std::exp(-s.log_evidence);
    s.split_posterior = g;

    s.height_at_query =
        query.is_inside() ? g * (1.0 + left.height_at_query + right.height_at_query) : 0.0;

    const double n2 = static_cast<double>(counts.n() + 2);
    s.avg_height = g * (1.0 + (static_cast<double>(counts.n_left + 1) / n2) * left.avg_height +
                        (static_cast<double>(counts.n_right + 1) / n2) * right.avg_height);

    const std::size_t dim = left.dims.probs.size();
    s.dims.probs.assign(dim, 0.0);
    s.dims.probs[0] = 1.0 - g;
    for (std::size_t k = 0; k + 1 < dim; ++k) {
        double conv = 0.0;
        for (std::size_t i = 0; i <= k; ++i)
            conv += left.dims.probs[i] * right.dims.probs[k - i];
        s.dims.probs[k + 1] = g * conv;
    }
    s.dims.close_tail();

    s.node_count = 1 + left.node_count + right.node_count;
    return s;
}

void check_sorted_unit_data(std::span<const double> data) {
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!(data[i] >= 0.0 && data[i] < 1.0))
            throw ArgumentError("data point " + std::to_string(i) + " outside [0,1)");
        if (i > 0 && data[i] < data[i - 1])
            throw ArgumentError("data must be sorted ascending");
    }
}

namespace {

struct Evaluator {
    const ModelConfig& config;

    // data is rescaled in place while descending.
    NodeSummary run(std::span<double> data, const QueryPosition& query, int depth,
                    int extra) const {
        const std::size_t n = data.size();
        const bool separated =
            n <= 1 && (n == 0 || !query.is_inside() || query.residual() == data[0]);

        if (depth >= config.max_depth) {
            if (n <= 1)
                return leaf_summary(static_cast<int>(n), query, config);
            if (config.duplicate_policy == DuplicatePolicy::error)
                throw DuplicateDataError("indistinguishable data points at depth " +
                                         std::to_string(depth));
            return finite_leaf_summary(config);
        }
        if (separated) {
            if (extra <= 0)
                return leaf_summary(static_cast<int>(n), query, config);
            --extra;
        }

        const auto mid = static_cast<std::size_t>(
            std::lower_bound(data.begin(), data.end(), 0.5) - data.begin());
        std::span<double> left = data.first(mid);
        std::span<double> right = data.subspan(mid);

        for (double& x : left)
            x = 2.0 * x;
        NodeSummary l = run(left, query.child(0), depth + 1, extra);
        for (double& x : right)
            x = 2.0 * x - 1.0;
        NodeSummary r = run(right, query.child(1), depth + 1, extra);

        const SplitCounts counts{static_cast<std::int64_t>(left.size()),
                                 static_cast<std::int64_t>(right.size())};
        return combine(l, r, counts, query, config);
    }
};

} // namespace

NodeSummary evaluate(std::span<const double> sorted_data, const QueryPosition& query,
                     const ModelConfig& config, const EvaluateOptions& options) {
    config.validate();
    check_sorted_unit_data(sorted_data);
    if (options.extra_depth < 0 || options.start_depth < 0)
        throw ArgumentError("evaluate: negative depth option");
    std::vector<double> work(sorted_data.begin(), sorted_data.end());
    return Evaluator{config}.run(work, query, options.start_depth, options.extra_depth);
}

} // namespace bayestree
