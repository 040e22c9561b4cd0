#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "rollcast/matrix.hpp"
#include "rollcast/rng.hpp"

namespace rollcast {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> row) const {
        int idx = 0;
        while (!nodes[static_cast<std::size_t>(idx)].is_leaf()) {
            const TreeNode& nd = nodes[static_cast<std::size_t>(idx)];
            idx = row[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(idx)].value;
    }
};

namespace detail {

/// Midpoint threshold between two consecutive sorted values. Guards against
/// the midpoint rounding up onto the right value, which would flip that
/// sample's side at prediction time.
inline double split_midpoint(double lo, double hi) {
    double mid = lo + (hi - lo) * 0.5;
    if (!(mid < hi)) mid = lo;
    return mid;
}

/// Regularized gain of a split given left/right gradient sums. With unit
/// hessians this reduces to the plain variance-reduction criterion.
inline double split_gain(double g_left, double h_left, double g_right, double h_right,
                         double lambda) {
    const double g = g_left + g_right;
    const double h = h_left + h_right;
    return 0.5 * (g_left * g_left / (h_left + lambda) + g_right * g_right / (h_right + lambda) -
                  g * g / (h + lambda));
}

}  // namespace detail

/// Exact greedy tree grower over gradient/hessian statistics, shared by both
/// tree learners: boosting passes squared-error (g, h) pairs and a leaf
/// regularizer; the forest passes g = -y, h = 1, lambda = 0 so leaf values
/// come out as node means and gain as variance reduction.
///
/// Split candidates are midpoints between consecutive sorted distinct values;
/// ties break toward the lowest feature index, then the lowest threshold.
/// Everything is deterministic: sorts are tie-broken by sample position and
/// feature subsets come from the caller's RNG stream in recursion order.
class TreeGrower {
public:
    struct Options {
        int max_depth = 0;            // 0 = unlimited
        double lambda = 0.0;          // leaf L2 regularizer
        double min_child_weight = 0;  // minimum hessian sum per child
        double leaf_scale = 1.0;      // multiplies -G/(H+lambda) at the leaf
    };

    /// Grows one tree on the sample multiset `indices` (duplicates allowed,
    /// e.g. a bootstrap draw). When `feature_rng` is non-null, a fresh subset
    /// of `features_per_split` features is drawn at every split; otherwise
    /// every feature is a candidate.
    static Tree grow(const RowMatrix& X, std::span<const double> g, std::span<const double> h,
                     std::span<const std::size_t> indices, const Options& opt,
                     Rng* feature_rng = nullptr, std::size_t features_per_split = 0) {
        Tree tree;
        Grower grower(X, g, h, opt, feature_rng, features_per_split, tree);
        grower.idx.assign(indices.begin(), indices.end());
        grower.partition_buf.resize(grower.idx.size());
        grower.build(0, grower.idx.size(), 0);
        return tree;
    }

private:
    struct Entry {
        double value;
        double g;
        double h;
        std::size_t pos;  // position in node order, for deterministic ties
    };

    struct Grower {
        const RowMatrix& X;
        std::span<const double> g;
        std::span<const double> h;
        const Options& opt;
        Rng* feature_rng;
        std::size_t features_per_split;
        Tree& tree;
        std::vector<std::size_t> idx;
        std::vector<std::size_t> partition_buf;
        std::vector<Entry> scratch;
        std::vector<std::size_t> feature_buf;

        Grower(const RowMatrix& X_, std::span<const double> g_, std::span<const double> h_,
               const Options& opt_, Rng* rng_, std::size_t fps_, Tree& tree_)
            : X(X_), g(g_), h(h_), opt(opt_), feature_rng(rng_), features_per_split(fps_),
              tree(tree_) {}

        int build(std::size_t lo, std::size_t hi, int depth) {
            double g_sum = 0.0, h_sum = 0.0;
            for (std::size_t k = lo; k < hi; ++k) {
                g_sum += g[idx[k]];
                h_sum += h[idx[k]];
            }
            const int node_id = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back({});
            tree.nodes[static_cast<std::size_t>(node_id)].value =
                opt.leaf_scale * (-g_sum / (h_sum + opt.lambda));

            if (opt.max_depth > 0 && depth >= opt.max_depth) return node_id;
            if (hi - lo < 2) return node_id;

            int best_feature = -1;
            double best_threshold = 0.0;
            double best_gain = 0.0;
            for (std::size_t f : candidate_features())
                scan_feature(lo, hi, f, g_sum, h_sum, best_feature, best_threshold, best_gain);
            if (best_feature < 0) return node_id;

            // Stable partition keeps relative sample order, so downstream
            // tie-breaking stays deterministic.
            std::size_t n_left = 0, n_right = 0;
            for (std::size_t k = lo; k < hi; ++k) {
                const std::size_t i = idx[k];
                if (X.at(i, static_cast<std::size_t>(best_feature)) <= best_threshold)
                    idx[lo + n_left++] = i;
                else
                    partition_buf[n_right++] = i;
            }
            std::copy(partition_buf.begin(), partition_buf.begin() + n_right,
                      idx.begin() + static_cast<std::ptrdiff_t>(lo + n_left));

            const std::size_t mid = lo + n_left;
            const int left_id = build(lo, mid, depth + 1);
            const int right_id = build(mid, hi, depth + 1);
            TreeNode& nd = tree.nodes[static_cast<std::size_t>(node_id)];
            nd.feature = best_feature;
            nd.threshold = best_threshold;
            nd.left = left_id;
            nd.right = right_id;
            return node_id;
        }

        std::span<const std::size_t> candidate_features() {
            feature_buf.resize(X.n_cols);
            for (std::size_t f = 0; f < X.n_cols; ++f) feature_buf[f] = f;
            if (feature_rng && features_per_split > 0 && features_per_split < X.n_cols) {
                // Partial Fisher-Yates, then ascending order so the lowest
                // feature index wins gain ties.
                for (std::size_t i = 0; i < features_per_split; ++i) {
                    std::size_t j =
                        i + static_cast<std::size_t>(feature_rng->below(X.n_cols - i));
                    std::swap(feature_buf[i], feature_buf[j]);
                }
                feature_buf.resize(features_per_split);
                std::sort(feature_buf.begin(), feature_buf.end());
            }
            return feature_buf;
        }

        void scan_feature(std::size_t lo, std::size_t hi, std::size_t f, double g_sum,
                          double h_sum, int& best_feature, double& best_threshold,
                          double& best_gain) {
            const std::size_t n = hi - lo;
            scratch.resize(n);
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t i = idx[lo + k];
                scratch[k] = {X.at(i, f), g[i], h[i], k};
            }
            std::sort(scratch.begin(), scratch.end(), [](const Entry& a, const Entry& b) {
                return a.value < b.value || (a.value == b.value && a.pos < b.pos);
            });

            double g_left = 0.0, h_left = 0.0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                g_left += scratch[k].g;
                h_left += scratch[k].h;
                if (scratch[k].value == scratch[k + 1].value) continue;
                const double h_right = h_sum - h_left;
                if (h_left < opt.min_child_weight || h_right < opt.min_child_weight) continue;
                const double gain =
                    detail::split_gain(g_left, h_left, g_sum - g_left, h_right, opt.lambda);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = detail::split_midpoint(scratch[k].value, scratch[k + 1].value);
                }
            }
        }
    };
};

}  // namespace rollcast
