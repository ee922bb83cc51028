#ifndef BAYESTREE_MODEL_HPP
#define BAYESTREE_MODEL_HPP

// Closed-form mathematics of the infinite binary tree mixture.
//
// Every cell of [0,1) is, with probability 1 - split_prior, uniform all the
// way down, and otherwise split in half with a uniform prior on the mass of
// each half, recursively. Evidences are kept in the per-cell rescaled
// convention in which a uniform cell assigns likelihood 1 to its data, and
// always in log form.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bayestree/config.hpp"

namespace bayestree {

struct SplitCounts {
    std::int64_t n_left = 0;
    std::int64_t n_right = 0;

    std::int64_t n() const { return n_left + n_right; }
    // n_left / n - 1/2; only meaningful for n() > 0.
    double balance() const;
};

/// Posterior distribution of the effective dimension (number of non-trivial
/// splits), truncated to dim_trunc entries. Mass beyond the truncation is
/// kept in tail_mass rather than dropped.
struct DimensionDistribution {
    std::vector<double> probs;
    double tail_mass = 0.0;

    // Sets tail_mass = 1 - sum(probs), clamping rounding noise at zero.
    void close_tail();
    double expected_lower_bound() const;   // sum k p_k + N * tail_mass
};

struct NodeSummary {
    double log_evidence = 0.0;
    double split_posterior = 0.0;
    double height_at_query = 0.0;
    double avg_height = 0.0;
    DimensionDistribution dims;
    std::int64_t node_count = 1;
};

/// Where a query point sits relative to the cell being processed. The
/// residual is the point's coordinate after rescaling the cell to [0,1).
class QueryPosition {
public:
    enum class Status { inside, outside, absent };

    static QueryPosition absent() { return QueryPosition(Status::absent, 0.0); }
    static QueryPosition outside() { return QueryPosition(Status::outside, 0.0); }
    // Throws ArgumentError unless 0 <= residual < 1.
    static QueryPosition inside(double residual);

    Status status() const { return status_; }
    bool is_inside() const { return status_ == Status::inside; }
    double residual() const { return residual_; }

    // Position relative to the left (bit 0) or right (bit 1) half.
    QueryPosition child(int bit) const;

private:
    QueryPosition(Status s, double r) : status_(s), residual_(r) {}
    Status status_;
    double residual_;
};

// a_0 .. a_{n-1}: prior probability that the effective dimension is k.
std::vector<double> prior_dim_coeffs(int n, double split_prior);

// ln w(n_left, n_right) = -n ln 2 + ln (n+1)! - ln n_left! - ln n_right!
double log_weight(const SplitCounts& counts);

// ln n!, accurate for very large n.
double log_factorial(std::int64_t n);

// Closed-form summary of a cell holding zero or one data point, i.e. the
// limit of the infinite recursion below the separation level. For n == 1 a
// query inside the cell is assumed to coincide with the datum.
NodeSummary leaf_summary(int n, const QueryPosition& query, const ModelConfig& config);

// Summary of a cell cut off at a finite depth: p = 1, zero heights, and a
// point mass at dimension zero.
NodeSummary finite_leaf_summary(const ModelConfig& config);

// ln((1 - b) + b e^t) with the overflow branch for large t.
double mix_log_evidence(double t, const ModelConfig& config);

// One step of the recursion: the parent summary from its two children.
NodeSummary combine(const NodeSummary& left, const NodeSummary& right,
                    const SplitCounts& counts, const QueryPosition& query,
                    const ModelConfig& config);

struct EvaluateOptions {
    // Keep recursing this many levels past the point where the closed form
    // would first apply. Results must not depend on it.
    int extra_depth = 0;
    // Depth of the cell the data live in; data are residuals in that cell.
    int start_depth = 0;
};

/// Full recursive evaluation on sorted residuals in [0,1).
///
/// Data are split at 1/2 (a point at exactly 1/2 goes right), rescaled by
/// x -> 2x or x -> 2x - 1, and recursed on until every cell holds at most one
/// point and the query, if any, is resolved. Cells that reach max_depth with
/// two or more points are handled by the duplicate policy.
NodeSummary evaluate(std::span<const double> sorted_data, const QueryPosition& query,
                     const ModelConfig& config, const EvaluateOptions& options = {});

// Throws ArgumentError unless data is ascending and inside [0,1).
void check_sorted_unit_data(std::span<const double> data);

} // namespace bayestree

#endif
