#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "rollcast/errors.hpp"
#include "rollcast/matrix.hpp"
#include "rollcast/rng.hpp"
#include "rollcast/tree.hpp"

namespace rollcast {

/// Bagged variance-reduction regression trees. Every tree draws a bootstrap
/// sample of size n (always on) and a fresh feature subset at each split,
/// both from a per-tree RNG stream derived from (seed, tree index), so the
/// fit is bit-identical at any thread count.
struct ForestParams {
    int n_estimators = 100;
    int max_depth = 0;  // 0 = unlimited
    int min_samples_leaf = 2;
    double feature_fraction = 1.0 / 3.0;  // fraction of features per split

    void validate() const {
        if (n_estimators < 1) throw InvalidHyperparameters("forest: n_estimators must be >= 1");
        if (max_depth < 0) throw InvalidHyperparameters("forest: max_depth must be >= 0");
        if (min_samples_leaf < 1)
            throw InvalidHyperparameters("forest: min_samples_leaf must be >= 1");
        if (!(feature_fraction > 0.0) || feature_fraction > 1.0)
            throw InvalidHyperparameters("forest: feature_fraction must be in (0, 1]");
    }

    bool operator==(const ForestParams&) const = default;
};

struct ForestModel {
    ForestParams params;
    std::uint64_t seed = 0;
    std::size_t feature_count = 0;
    std::vector<Tree> trees;

    double tree_prediction(std::size_t t, std::span<const double> row) const {
        return trees[t].predict(row);
    }

    /// Mean over per-tree predictions, summed in tree order.
    double predict_row(std::span<const double> row) const {
        double acc = 0.0;
        for (const Tree& t : trees) acc += t.predict(row);
        return acc / static_cast<double>(trees.size());
    }

    std::vector<double> predict(const RowMatrix& X) const {
        std::vector<double> out(X.n_rows);
        for (std::size_t i = 0; i < X.n_rows; ++i) out[i] = predict_row(X.row(i));
        return out;
    }
};

namespace detail {
inline std::size_t forest_features_per_split(const ForestParams& p, std::size_t n_cols) {
    auto k = static_cast<std::size_t>(
        std::ceil(p.feature_fraction * static_cast<double>(n_cols)));
    return std::clamp<std::size_t>(k, 1, n_cols);
}
}  // namespace detail

/// Grows one forest tree on an explicit sample multiset. fit_forest feeds
/// bootstrap draws through here; tests may pass the identity sample to
/// compare against a plain CART fit.
inline Tree fit_forest_tree(const ForestParams& params, const RowMatrix& X,
                            std::span<const double> y, std::span<const std::size_t> indices,
                            Rng& rng) {
    params.validate();
    // Grow on sample-centered targets so split gains stay numerically
    // shift-invariant at dollar scale, then restore the level at the leaves.
    // Leaf values still come out as plain node means.
    double mean = 0.0;
    for (std::size_t i : indices) mean += y[i];
    mean /= static_cast<double>(indices.size());
    std::vector<double> g(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) g[i] = mean - y[i];
    std::vector<double> h(y.size(), 1.0);
    TreeGrower::Options opt;
    opt.max_depth = params.max_depth;
    opt.lambda = 0.0;
    opt.min_child_weight = static_cast<double>(params.min_samples_leaf);
    const std::size_t fps = detail::forest_features_per_split(params, X.n_cols);
    Rng* feature_rng = fps < X.n_cols ? &rng : nullptr;
    Tree tree = TreeGrower::grow(X, g, h, indices, opt, feature_rng, fps);
    for (TreeNode& nd : tree.nodes)
        if (nd.is_leaf()) nd.value += mean;
    return tree;
}

inline ForestModel fit_forest(const ForestParams& params, const RowMatrix& X,
                              std::span<const double> y, std::uint64_t seed, int threads = 0) {
    params.validate();
    const std::size_t n = X.n_rows;
    ForestModel model;
    model.params = params;
    model.seed = seed;
    model.feature_count = X.n_cols;
    model.trees.resize(static_cast<std::size_t>(params.n_estimators));

    auto build_tree = [&](std::size_t t) {
        Rng rng(seed, t);
        std::vector<std::size_t> sample(n);
        for (std::size_t i = 0; i < n; ++i) sample[i] = static_cast<std::size_t>(rng.below(n));
        model.trees[t] = fit_forest_tree(params, X, y, sample, rng);
    };

    int n_threads = threads;
    if (n_threads <= 0) {
        // Work-size heuristic: parallel trees only where it pays off.
        const bool big = n >= 2048 && params.n_estimators >= 8;
        n_threads = big ? static_cast<int>(
                              std::min<unsigned>(4, std::thread::hardware_concurrency()))
                        : 1;
    }
    if (n_threads <= 1) {
        for (std::size_t t = 0; t < model.trees.size(); ++t) build_tree(t);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int w = 0; w < n_threads; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t t = static_cast<std::size_t>(w); t < model.trees.size();
                     t += static_cast<std::size_t>(n_threads))
                    build_tree(t);
            });
        }
        for (auto& th : pool) th.join();
    }
    return model;
}

}  // namespace rollcast
