#ifndef BAYESTREE_TREE_HPP
#define BAYESTREE_TREE_HPP

// Explicit tree down to the separation level with cached node summaries.
//
// Local quantities (predictive density, CDF, tree height at a point,
// single-point updates) only touch the root-to-leaf path of the query; the
// sibling of every path node contributes its cached evidence. Nodes are
// immutable and shared, so insert/remove return a new tree that reuses every
// subtree off the updated path.

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "bayestree/config.hpp"
#include "bayestree/model.hpp"

namespace bayestree {

class TreeNode;
using NodePtr = std::shared_ptr<const TreeNode>;

class TreeNode {
public:
    int depth() const { return depth_; }
    const SplitCounts& counts() const { return counts_; }
    std::int64_t n() const { return counts_.n(); }
    const NodeSummary& summary() const { return summary_; }

    bool is_leaf() const { return !left_; }
    const TreeNode* left() const { return left_.get(); }
    const TreeNode* right() const { return right_.get(); }
    const NodePtr& left_ptr() const { return left_; }
    const NodePtr& right_ptr() const { return right_; }

    // Residual coordinates (within this cell) of the data held by a leaf.
    // More than one entry only for leaves cut off at max_depth.
    std::span<const double> leaf_data() const { return leaf_data_; }
    std::optional<double> leaf_datum() const;

    static NodePtr make_leaf(int depth, std::vector<double> residuals, NodeSummary summary);
    static NodePtr make_internal(int depth, NodePtr left, NodePtr right,
                                 const ModelConfig& config);

private:
    int depth_ = 0;
    SplitCounts counts_;
    NodeSummary summary_;
    NodePtr left_;
    NodePtr right_;
    std::vector<double> leaf_data_;
};

class FittedTree {
public:
    FittedTree(NodePtr root, ModelConfig config);

    const TreeNode& root() const { return *root_; }
    const NodePtr& root_ptr() const { return root_; }
    const ModelConfig& config() const { return config_; }
    std::int64_t size() const { return root_->n(); }
    double log_evidence() const { return root_->summary().log_evidence; }

private:
    NodePtr root_;
    ModelConfig config_;
};

// Number of tree nodes touched by a local query.
struct PathStats {
    std::int64_t nodes_visited = 0;
};

struct CellReport {
    double lo = 0.0;
    double hi = 1.0;
    int depth = 0;
    std::int64_t count = 0;
    bool is_map_leaf = true;
};

struct TreeStats {
    double log_evidence = 0.0;
    DimensionDistribution dims;
    double avg_height = 0.0;
    std::int64_t node_count = 0;
    std::int64_t n = 0;
    // leaves_by_depth[d] = number of leaves at depth d.
    std::vector<std::int64_t> leaves_by_depth;
};

FittedTree build(std::span<const double> data, const ModelConfig& config);

// ln p(D u {x}) computed along the path of x only.
double log_evidence_with(const FittedTree& tree, double x, PathStats* stats = nullptr);
double log_predictive_density(const FittedTree& tree, double x, PathStats* stats = nullptr);
double predictive_density(const FittedTree& tree, double x, PathStats* stats = nullptr);

// Posterior-predictive P[X <= a | D].
double cdf(const FittedTree& tree, double a, PathStats* stats = nullptr);

// E[h(x) | D], the expected number of splits on the path containing x.
double height_at(const FittedTree& tree, double x, PathStats* stats = nullptr);

// Draws one point from the posterior predictive. `uniform` must return
// independent values in [0,1).
template <class UniformSource>
double sample(const FittedTree& tree, UniformSource&& uniform);

// Uniform in [0,1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double sample(const FittedTree& tree, std::mt19937_64& rng) {
    return sample(tree, [&rng] { return uniform01(rng); });
}

FittedTree insert(const FittedTree& tree, double x, PathStats* stats = nullptr);
FittedTree remove(const FittedTree& tree, double x, PathStats* stats = nullptr);

// Leaves of the MAP-like skeleton, left to right. A node stays split only if
// p_left p_right / w > 1.
std::vector<CellReport> map_skeleton(const FittedTree& tree);

TreeStats node_stats(const FittedTree& tree);

// ---------------------------------------------------------------------------

namespace detail {

// Uniform point in [lo, lo + width).
template <class UniformSource>
double sample_in_cell(double lo, double width, UniformSource& uniform) {
    const double x = lo + width * uniform();
    const double hi = lo + width;
    return x < hi ? x : std::nextafter(hi, lo);
}

} // namespace detail

template <class UniformSource>
double sample(const FittedTree& tree, UniformSource&& uniform) {
    const double b = tree.config().split_prior;
    const int max_depth = tree.config().max_depth;
    const TreeNode* node = &tree.root();
    double lo = 0.0;
    double width = 1.0;

    while (!node->is_leaf()) {
        const double g = node->summary().split_posterior;
        if (uniform() >= g)
            return detail::sample_in_cell(lo, width, uniform);
        const SplitCounts& c = node->counts();
        const double q_left =
            static_cast<double>(c.n_left + 1) / static_cast<double>(c.n() + 2);
        width *= 0.5;
        if (uniform() < q_left) {
            node = node->left();
        } else {
            lo += width;
            node = node->right();
        }
    }

    const auto datum = node->leaf_datum();
    if (!datum || node->depth() >= max_depth)
        return detail::sample_in_cell(lo, width, uniform);

    // Singleton cell: the split posterior is b at every level and the half
    // holding the datum has posterior mean mass 2/3.
    double y = *datum;
    for (int depth = node->depth(); depth < max_depth; ++depth) {
        if (uniform() >= b)
            return detail::sample_in_cell(lo, width, uniform);
        const int occupied = y < 0.5 ? 0 : 1;
        const int side = uniform() < 2.0 / 3.0 ? occupied : 1 - occupied;
        width *= 0.5;
        if (side == 1)
            lo += width;
        if (side != occupied)
            return detail::sample_in_cell(lo, width, uniform);
        y = occupied == 0 ? 2.0 * y : 2.0 * y - 1.0;
    }
    return detail::sample_in_cell(lo, width, uniform);
}

} // namespace bayestree

#endif
