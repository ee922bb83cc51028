#include "bayestree/tree.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace bayestree {

std::optional<double> TreeNode::leaf_datum() const {
    if (is_leaf() && leaf_data_.size() == 1)
        return leaf_data_.front();
    return std::nullopt;
}

NodePtr TreeNode::make_leaf(int depth, std::vector<double> residuals, NodeSummary summary) {
    auto node = std::make_shared<TreeNode>();
    node->depth_ = depth;
    node->counts_ = SplitCounts{static_cast<std::int64_t>(residuals.size()), 0};
    node->summary_ = std::move(summary);
    node->leaf_data_ = std::move(residuals);
    return node;
}

NodePtr TreeNode::make_internal(int depth, NodePtr left, NodePtr right,
                                const ModelConfig& config) {
    auto node = std::make_shared<TreeNode>();
    node->depth_ = depth;
    node->counts_ = SplitCounts{left->n(), right->n()};
    node->summary_ = combine(left->summary(), right->summary(), node->counts_,
                             QueryPosition::absent(), config);
    node->left_ = std::move(left);
    node->right_ = std::move(right);
    return node;
}

FittedTree::FittedTree(NodePtr root, ModelConfig config)
    : root_(std::move(root)), config_(std::move(config)) {}

namespace {

void check_unit(double x, const char* what) {
    if (!(x >= 0.0 && x < 1.0))
        throw ArgumentError(std::string(what) + ": point outside [0,1)");
}

int side_of(double r) { return r < 0.5 ? 0 : 1; }
double descend(double r) { return r < 0.5 ? 2.0 * r : 2.0 * r - 1.0; }

// Builds the subtree for sorted residuals at the given depth. Rescales the
// span in place.
NodePtr build_node(std::span<double> data, int depth, const ModelConfig& config) {
    const std::size_t n = data.size();
    if (n <= 1)
        return TreeNode::make_leaf(depth, {data.begin(), data.end()},
                                   leaf_summary(static_cast<int>(n), QueryPosition::absent(),
                                                config));
    if (depth >= config.max_depth) {
        if (config.duplicate_policy == DuplicatePolicy::error)
            throw DuplicateDataError("indistinguishable data points at depth " +
                                     std::to_string(depth));
        return TreeNode::make_leaf(depth, {data.begin(), data.end()},
                                   finite_leaf_summary(config));
    }
    const auto mid = static_cast<std::size_t>(
        std::lower_bound(data.begin(), data.end(), 0.5) - data.begin());
    std::span<double> left = data.first(mid);
    std::span<double> right = data.subspan(mid);
    for (double& x : left)
        x = 2.0 * x;
    NodePtr l = build_node(left, depth + 1, config);
    for (double& x : right)
        x = 2.0 * x - 1.0;
    NodePtr r = build_node(right, depth + 1, config);
    return TreeNode::make_internal(depth, std::move(l), std::move(r), config);
}

NodePtr build_leaf_cell(std::vector<double> residuals, int depth, const ModelConfig& config) {
    std::sort(residuals.begin(), residuals.end());
    return build_node(residuals, depth, config);
}

// All residuals stored below `node`, expressed in node's own cell.
void collect_residuals(const TreeNode& node, std::vector<double>& out) {
    if (node.is_leaf()) {
        out.insert(out.end(), node.leaf_data().begin(), node.leaf_data().end());
        return;
    }
    const std::size_t start = out.size();
    collect_residuals(*node.left(), out);
    for (std::size_t i = start; i < out.size(); ++i)
        out[i] = 0.5 * out[i];
    const std::size_t mid = out.size();
    collect_residuals(*node.right(), out);
    for (std::size_t i = mid; i < out.size(); ++i)
        out[i] = 0.5 * (out[i] + 1.0);
}

void visit(PathStats* stats) {
    if (stats)
        ++stats->nodes_visited;
}

double leaf_log_evidence_with(const TreeNode& leaf, double r, const ModelConfig& config) {
    std::vector<double> cell(leaf.leaf_data().begin(), leaf.leaf_data().end());
    cell.push_back(r);
    std::sort(cell.begin(), cell.end());
    return evaluate(cell, QueryPosition::absent(), config, {0, leaf.depth()}).log_evidence;
}

double path_log_evidence(const TreeNode& node, double r, const ModelConfig& config,
                         PathStats* stats) {
    visit(stats);
    if (node.is_leaf())
        return leaf_log_evidence_with(node, r, config);
    const int bit = side_of(r);
    const TreeNode& on_path = bit == 0 ? *node.left() : *node.right();
    const TreeNode& off_path = bit == 0 ? *node.right() : *node.left();
    const double child = path_log_evidence(on_path, descend(r), config, stats);
    SplitCounts counts = node.counts();
    (bit == 0 ? counts.n_left : counts.n_right) += 1;
    const double t = child + off_path.summary().log_evidence - log_weight(counts);
    return mix_log_evidence(t, config);
}

// Predictive CDF inside a cell holding a single datum y. Below the cell the
// split posterior is b at every level; the occupied half has mass 2/3.
double singleton_cdf(double y, double a, int levels, double b) {
    double acc = 0.0;
    double scale = 1.0;
    for (int i = 0; i < levels; ++i) {
        const int ya = side_of(y);
        if (a < 0.5) {
            if (ya == 1)
                return acc + scale * ((1.0 - b) * a + b * (1.0 / 3.0) * (2.0 * a));
            acc += scale * (1.0 - b) * a;
            scale *= b * (2.0 / 3.0);
            a = 2.0 * a;
        } else {
            if (ya == 0)
                return acc + scale * ((1.0 - b) * a + b * (2.0 / 3.0 + (1.0 / 3.0) * (2.0 * a - 1.0)));
            acc += scale * ((1.0 - b) * a + b * (1.0 / 3.0));
            scale *= b * (2.0 / 3.0);
            a = 2.0 * a - 1.0;
        }
        y = descend(y);
    }
    return acc + scale * a;
}

NodePtr insert_node(const NodePtr& node, double r, const ModelConfig& config,
                    PathStats* stats) {
    visit(stats);
    if (node->is_leaf()) {
        std::vector<double> cell(node->leaf_data().begin(), node->leaf_data().end());
        cell.push_back(r);
        return build_leaf_cell(std::move(cell), node->depth(), config);
    }
    if (side_of(r) == 0)
        return TreeNode::make_internal(node->depth(),
                                       insert_node(node->left_ptr(), descend(r), config, stats),
                                       node->right_ptr(), config);
    return TreeNode::make_internal(node->depth(), node->left_ptr(),
                                   insert_node(node->right_ptr(), descend(r), config, stats),
                                   config);
}

NodePtr remove_node(const NodePtr& node, double r, const ModelConfig& config,
                    PathStats* stats) {
    visit(stats);
    if (node->is_leaf()) {
        std::vector<double> cell(node->leaf_data().begin(), node->leaf_data().end());
        // Exact bit match, no tolerance.
        const auto it = std::find(cell.begin(), cell.end(), r);
        if (it == cell.end())
            throw NotFoundError("remove: value not stored in the tree");
        cell.erase(it);
        return build_leaf_cell(std::move(cell), node->depth(), config);
    }
    NodePtr left = node->left_ptr();
    NodePtr right = node->right_ptr();
    if (side_of(r) == 0)
        left = remove_node(left, descend(r), config, stats);
    else
        right = remove_node(right, descend(r), config, stats);

    if (left->n() + right->n() <= 1) {
        // Dropped back to the separation level: contract into a leaf.
        std::vector<double> cell;
        auto contracted = TreeNode::make_internal(node->depth(), left, right, config);
        collect_residuals(*contracted, cell);
        return build_leaf_cell(std::move(cell), node->depth(), config);
    }
    return TreeNode::make_internal(node->depth(), std::move(left), std::move(right), config);
}

void collect_map_cells(const TreeNode& node, double lo, std::vector<CellReport>& out) {
    const double width = std::ldexp(1.0, -node.depth());
    bool leaf = node.is_leaf();
    if (!leaf) {
        const double t = node.left()->summary().log_evidence +
                         node.right()->summary().log_evidence - log_weight(node.counts());
        leaf = !(t > 0.0);
    }
    if (leaf) {
        out.push_back(CellReport{lo, lo + width, node.depth(), node.n(), true});
        return;
    }
    collect_map_cells(*node.left(), lo, out);
    collect_map_cells(*node.right(), lo + 0.5 * width, out);
}

void collect_leaf_depths(const TreeNode& node, std::vector<std::int64_t>& hist) {
    if (node.is_leaf()) {
        const auto d = static_cast<std::size_t>(node.depth());
        if (hist.size() <= d)
            hist.resize(d + 1, 0);
        ++hist[d];
        return;
    }
    collect_leaf_depths(*node.left(), hist);
    collect_leaf_depths(*node.right(), hist);
}

} // namespace

FittedTree build(std::span<const double> data, const ModelConfig& config) {
    config.validate();
    std::vector<double> work(data.begin(), data.end());
    for (std::size_t i = 0; i < work.size(); ++i) {
        if (!(work[i] >= 0.0 && work[i] < 1.0))
            throw ArgumentError("build: data point " + std::to_string(i) + " outside [0,1)");
    }
    std::sort(work.begin(), work.end());
    return FittedTree(build_node(work, 0, config), config);
}

double log_evidence_with(const FittedTree& tree, double x, PathStats* stats) {
    check_unit(x, "log_evidence_with");
    return path_log_evidence(tree.root(), x, tree.config(), stats);
}

double log_predictive_density(const FittedTree& tree, double x, PathStats* stats) {
    return log_evidence_with(tree, x, stats) - tree.log_evidence();
}

double predictive_density(const FittedTree& tree, double x, PathStats* stats) {
    return std::exp(log_predictive_density(tree, x, stats));
}

double cdf(const FittedTree& tree, double a, PathStats* stats) {
    if (!(a >= 0.0 && a <= 1.0))
        throw ArgumentError("cdf: argument outside [0,1]");
    if (a == 0.0)
        return 0.0;
    if (a == 1.0)
        return 1.0;

    const ModelConfig& config = tree.config();
    double acc = 0.0;
    double scale = 1.0;
    const TreeNode* node = &tree.root();
    while (!node->is_leaf()) {
        visit(stats);
        const double g = node->summary().split_posterior;
        const SplitCounts& c = node->counts();
        const double n2 = static_cast<double>(c.n() + 2);
        const double q_left = static_cast<double>(c.n_left + 1) / n2;
        const double q_right = static_cast<double>(c.n_right + 1) / n2;
        acc += scale * (1.0 - g) * a;
        if (a < 0.5) {
            scale *= g * q_left;
            a = 2.0 * a;
            node = node->left();
        } else {
            acc += scale * g * q_left;
            scale *= g * q_right;
            a = 2.0 * a - 1.0;
            node = node->right();
        }
    }
    visit(stats);
    double local = a;
    if (const auto datum = node->leaf_datum(); datum && node->depth() < config.max_depth)
        local = singleton_cdf(*datum, a, config.max_depth - node->depth(), config.split_prior);
    return std::clamp(acc + scale * local, 0.0, 1.0);
}

double height_at(const FittedTree& tree, double x, PathStats* stats) {
    check_unit(x, "height_at");
    const ModelConfig& config = tree.config();
    // h = g_0 (1 + g_1 (1 + ... (1 + h_leaf)))
    std::vector<double> gs;
    const TreeNode* node = &tree.root();
    double r = x;
    while (!node->is_leaf()) {
        visit(stats);
        gs.push_back(node->summary().split_posterior);
        node = side_of(r) == 0 ? node->left() : node->right();
        r = descend(r);
    }
    visit(stats);
    double h;
    if (node->n() <= 1) {
        std::vector<double> cell(node->leaf_data().begin(), node->leaf_data().end());
        h = evaluate(cell, QueryPosition::inside(r), config, {0, node->depth()}).height_at_query;
    } else {
        h = 0.0;
    }
    for (auto it = gs.rbegin(); it != gs.rend(); ++it)
        h = *it * (1.0 + h);
    return h;
}

FittedTree insert(const FittedTree& tree, double x, PathStats* stats) {
    check_unit(x, "insert");
    return FittedTree(insert_node(tree.root_ptr(), x, tree.config(), stats), tree.config());
}

FittedTree remove(const FittedTree& tree, double x, PathStats* stats) {
    if (!(x >= 0.0 && x < 1.0))
        throw NotFoundError("remove: value outside [0,1) is never stored");
    return FittedTree(remove_node(tree.root_ptr(), x, tree.config(), stats), tree.config());
}

std::vector<CellReport> map_skeleton(const FittedTree& tree) {
    std::vector<CellReport> cells;
    collect_map_cells(tree.root(), 0.0, cells);
    return cells;
}

TreeStats node_stats(const FittedTree& tree) {
    const NodeSummary& s = tree.root().summary();
    TreeStats stats;
    stats.log_evidence = s.log_evidence;
    stats.dims = s.dims;
    stats.avg_height = s.avg_height;
    stats.node_count = s.node_count;
    stats.n = tree.size();
    collect_leaf_depths(tree.root(), stats.leaves_by_depth);
    return stats;
}

} // namespace bayestree
