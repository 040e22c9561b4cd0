#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rollcast/errors.hpp"
#include "rollcast/matrix.hpp"
#include "rollcast/tree.hpp"

namespace rollcast {

/// Regularized stagewise tree boosting on the squared-error objective:
/// exact greedy splits, second-order leaf weights w = -G / (H + lambda_l2),
/// prediction = base_score + learning_rate * sum of tree outputs.
struct GbrtParams {
    int n_estimators = 100;      // 0 is the empty ensemble: base_score only
    double learning_rate = 0.1;  // (0, 1]
    int max_depth = 4;           // 0 = unlimited
    double lambda_l2 = 1.0;
    double min_child_weight = 1.0;

    void validate() const {
        if (n_estimators < 0) throw InvalidHyperparameters("gbrt: n_estimators must be >= 0");
        if (!(learning_rate > 0.0) || learning_rate > 1.0)
            throw InvalidHyperparameters("gbrt: learning_rate must be in (0, 1]");
        if (max_depth < 0) throw InvalidHyperparameters("gbrt: max_depth must be >= 0");
        if (lambda_l2 < 0.0) throw InvalidHyperparameters("gbrt: lambda_l2 must be >= 0");
        if (min_child_weight < 0.0)
            throw InvalidHyperparameters("gbrt: min_child_weight must be >= 0");
    }

    bool operator==(const GbrtParams&) const = default;
};

struct GbrtModel {
    GbrtParams params;
    double base_score = 0.0;  // mean of training targets
    std::size_t feature_count = 0;
    std::vector<Tree> trees;
    std::vector<double> stage_train_rmse;  // training RMSE after each stage

    double predict_row(std::span<const double> row) const {
        double acc = 0.0;
        for (const Tree& t : trees) acc += t.predict(row);
        return base_score + params.learning_rate * acc;
    }

    std::vector<double> predict(const RowMatrix& X) const {
        std::vector<double> out(X.n_rows);
        for (std::size_t i = 0; i < X.n_rows; ++i) out[i] = predict_row(X.row(i));
        return out;
    }
};

namespace detail {

/// Level-order tree growth over globally presorted feature columns. Each
/// level walks every feature's sorted order once, accumulating per-node
/// prefix statistics, so no per-node sorting is ever needed. This is what
/// keeps full-size boosted fits inside the training-time budget.
class BoostedLevelGrower {
public:
    BoostedLevelGrower(const RowMatrix& X, const std::vector<std::vector<std::uint32_t>>& orders)
        : X_(X), orders_(orders) {}

    Tree grow(std::span<const double> g, const GbrtParams& p, std::vector<int>& node_of,
              std::vector<double>& leaf_of_sample) {
        const std::size_t n = X_.n_rows;
        const std::size_t d = X_.n_cols;
        Tree tree;

        double g_root = 0.0;
        for (std::size_t i = 0; i < n; ++i) g_root += g[i];
        tree.nodes.push_back({});
        node_g_ = {g_root};
        node_h_ = {static_cast<double>(n)};

        std::fill(node_of.begin(), node_of.end(), 0);
        std::vector<int> level = {0};
        int depth = 0;

        while (!level.empty() && (p.max_depth == 0 || depth < p.max_depth)) {
            const int level_first = level.front();
            const std::size_t width = level.size();
            best_.assign(width, {});
            state_.assign(width, {});

            for (std::size_t f = 0; f < d; ++f) {
                for (auto& st : state_) st = {};
                for (std::uint32_t i : orders_[f]) {
                    const int nd = node_of[i];
                    if (nd < level_first) continue;
                    const std::size_t slot = static_cast<std::size_t>(nd - level_first);
                    WalkState& st = state_[slot];
                    const double v = X_.at(i, f);
                    if (st.started && v != st.last_value) {
                        const double h_right = node_h_[static_cast<std::size_t>(nd)] - st.h_left;
                        if (st.h_left >= p.min_child_weight && h_right >= p.min_child_weight) {
                            const double gain = split_gain(
                                st.g_left, st.h_left,
                                node_g_[static_cast<std::size_t>(nd)] - st.g_left, h_right,
                                p.lambda_l2);
                            if (gain > best_[slot].gain) {
                                best_[slot] = {gain, static_cast<int>(f),
                                               split_midpoint(st.last_value, v), st.g_left,
                                               st.h_left};
                            }
                        }
                    }
                    st.g_left += g[i];
                    st.h_left += 1.0;
                    st.last_value = v;
                    st.started = true;
                }
            }

            // Apply the winning split of each node; settle the rest as leaves.
            std::vector<int> next_level;
            for (std::size_t s = 0; s < width; ++s) {
                const int nd = level_first + static_cast<int>(s);
                const double nd_g = node_g_[static_cast<std::size_t>(nd)];
                const double nd_h = node_h_[static_cast<std::size_t>(nd)];
                const Best& b = best_[s];
                if (b.feature < 0 || !(b.gain > 0.0)) {
                    tree.nodes[static_cast<std::size_t>(nd)].value =
                        -nd_g / (nd_h + p.lambda_l2);
                    continue;
                }
                const int left_id = static_cast<int>(tree.nodes.size());
                tree.nodes.push_back({});
                tree.nodes.push_back({});
                node_g_.push_back(b.g_left);
                node_h_.push_back(b.h_left);
                node_g_.push_back(nd_g - b.g_left);
                node_h_.push_back(nd_h - b.h_left);
                TreeNode& node = tree.nodes[static_cast<std::size_t>(nd)];
                node.feature = b.feature;
                node.threshold = b.threshold;
                node.left = left_id;
                node.right = left_id + 1;
                next_level.push_back(left_id);
                next_level.push_back(left_id + 1);
            }

            // Reassign samples: settled nodes emit leaf values, split nodes
            // route their samples to the children.
            for (std::size_t i = 0; i < n; ++i) {
                const int nd = node_of[i];
                if (nd < level_first) continue;
                const TreeNode& node = tree.nodes[static_cast<std::size_t>(nd)];
                if (node.is_leaf()) {
                    leaf_of_sample[i] = node.value;
                    node_of[i] = -1;
                } else {
                    node_of[i] = X_.at(i, static_cast<std::size_t>(node.feature)) <= node.threshold
                                     ? node.left
                                     : node.right;
                }
            }
            level = std::move(next_level);
            ++depth;
        }

        // Depth cap reached: everything still active becomes a leaf.
        for (int nd : level) {
            TreeNode& node = tree.nodes[static_cast<std::size_t>(nd)];
            node.value = -node_g_[static_cast<std::size_t>(nd)] /
                         (node_h_[static_cast<std::size_t>(nd)] + p.lambda_l2);
        }
        if (!level.empty()) {
            const int level_first = level.front();
            for (std::size_t i = 0; i < X_.n_rows; ++i) {
                if (node_of[i] >= level_first) {
                    leaf_of_sample[i] = tree.nodes[static_cast<std::size_t>(node_of[i])].value;
                    node_of[i] = -1;
                }
            }
        }
        return tree;
    }

private:
    struct WalkState {
        double g_left = 0.0;
        double h_left = 0.0;
        double last_value = 0.0;
        bool started = false;
    };
    struct Best {
        double gain = 0.0;
        int feature = -1;
        double threshold = 0.0;
        double g_left = 0.0;
        double h_left = 0.0;
    };

    const RowMatrix& X_;
    const std::vector<std::vector<std::uint32_t>>& orders_;
    std::vector<double> node_g_;
    std::vector<double> node_h_;
    std::vector<Best> best_;
    std::vector<WalkState> state_;
};

inline std::vector<std::vector<std::uint32_t>> presort_columns(const RowMatrix& X) {
    std::vector<std::vector<std::uint32_t>> orders(X.n_cols);
    for (std::size_t f = 0; f < X.n_cols; ++f) {
        auto& ord = orders[f];
        ord.resize(X.n_rows);
        for (std::size_t i = 0; i < X.n_rows; ++i) ord[i] = static_cast<std::uint32_t>(i);
        std::sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
            const double va = X.at(a, f), vb = X.at(b, f);
            return va < vb || (va == vb && a < b);
        });
    }
    return orders;
}

}  // namespace detail

inline GbrtModel fit_gbrt(const GbrtParams& params, const RowMatrix& X,
                          std::span<const double> y) {
    params.validate();
    const std::size_t n = X.n_rows;

    GbrtModel model;
    model.params = params;
    model.feature_count = X.n_cols;
    double mean = 0.0;
    for (double v : y) mean += v;
    model.base_score = mean / static_cast<double>(n);

    if (params.n_estimators == 0) return model;

    const auto orders = detail::presort_columns(X);
    detail::BoostedLevelGrower grower(X, orders);

    std::vector<double> pred(n, model.base_score);
    std::vector<double> grad(n);
    std::vector<int> node_of(n);
    std::vector<double> leaf_of_sample(n);

    model.trees.reserve(static_cast<std::size_t>(params.n_estimators));
    model.stage_train_rmse.reserve(static_cast<std::size_t>(params.n_estimators));
    for (int stage = 0; stage < params.n_estimators; ++stage) {
        for (std::size_t i = 0; i < n; ++i) grad[i] = pred[i] - y[i];
        model.trees.push_back(grower.grow(grad, params, node_of, leaf_of_sample));
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] += params.learning_rate * leaf_of_sample[i];
            const double e = pred[i] - y[i];
            sse += e * e;
        }
        model.stage_train_rmse.push_back(std::sqrt(sse / static_cast<double>(n)));
    }
    return model;
}

}  // namespace rollcast
