#pragma once

// Shared fixtures and independent oracles for the test suites. The oracles
// deliberately take the naive route (exhaustive enumeration, closed forms,
// finite differences) so they stay independent of the library's
// implementation paths.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "rollcast/calendar.hpp"
#include "rollcast/matrix.hpp"
#include "rollcast/rng.hpp"
#include "rollcast/series.hpp"
#include "rollcast/synthetic.hpp"

namespace testutil {

using rollcast::Date;
using rollcast::make_date;

inline rollcast::TradingCalendar default_calendar(std::set<Date> holidays = {}) {
    return rollcast::TradingCalendar(std::chrono::minutes{9 * 60 + 30},
                                     std::chrono::minutes{16 * 60}, std::move(holidays));
}

/// Scratch directory under the system temp root, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& stem) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                (stem + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

// ---------------------------------------------------------------------------
// Small dense matrices for learner tests.

struct DenseData {
    std::vector<double> flat;
    std::size_t rows = 0;
    std::size_t cols = 0;

    rollcast::RowMatrix view() const { return rollcast::RowMatrix::of(flat, rows, cols); }
    double at(std::size_t r, std::size_t c) const { return flat[r * cols + c]; }
};

inline DenseData make_dense(const std::vector<std::vector<double>>& rows) {
    DenseData d;
    d.rows = rows.size();
    d.cols = rows.empty() ? 0 : rows[0].size();
    for (const auto& r : rows) d.flat.insert(d.flat.end(), r.begin(), r.end());
    return d;
}

inline DenseData random_dense(std::size_t rows, std::size_t cols, std::uint64_t seed,
                              double lo = 0.0, double hi = 1.0) {
    rollcast::Rng rng(seed);
    DenseData d;
    d.rows = rows;
    d.cols = cols;
    d.flat.resize(rows * cols);
    for (double& v : d.flat) v = rng.uniform(lo, hi);
    return d;
}

// ---------------------------------------------------------------------------
// Exhaustive regression-tree oracle. Enumerates every (feature, midpoint)
// split recursively and evaluates the regularized gain straight from its
// definition. Ties break to the lowest feature index, then lowest threshold.

struct OracleTree {
    int feature = -1;
    double threshold = 0.0;
    double value = 0.0;
    std::unique_ptr<OracleTree> left;
    std::unique_ptr<OracleTree> right;

    double predict(const std::vector<double>& row) const {
        if (feature < 0) return value;
        return row[static_cast<std::size_t>(feature)] <= threshold ? left->predict(row)
                                                                   : right->predict(row);
    }
};

struct OracleTreeOptions {
    double lambda = 0.0;
    double min_child_weight = 0.0;
    int max_depth = 0;  // 0 = unlimited
};

inline std::unique_ptr<OracleTree> oracle_fit_tree(const std::vector<std::vector<double>>& X,
                                                   const std::vector<double>& g,
                                                   const std::vector<std::size_t>& members,
                                                   const OracleTreeOptions& opt, int depth = 0) {
    auto node = std::make_unique<OracleTree>();
    double g_sum = 0.0;
    for (std::size_t i : members) g_sum += g[i];
    const double h_sum = static_cast<double>(members.size());
    node->value = -g_sum / (h_sum + opt.lambda);
    if ((opt.max_depth > 0 && depth >= opt.max_depth) || members.size() < 2) return node;

    const std::size_t d = X[0].size();
    double best_gain = 0.0;
    int best_f = -1;
    double best_thr = 0.0;
    auto objective = [&](double gs, double hs) { return gs * gs / (hs + opt.lambda); };
    for (std::size_t f = 0; f < d; ++f) {
        std::vector<double> values;
        for (std::size_t i : members) values.push_back(X[i][f]);
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t k = 0; k + 1 < values.size(); ++k) {
            double thr = (values[k] + values[k + 1]) / 2.0;
            if (!(thr < values[k + 1])) thr = values[k];
            double gl = 0.0, hl = 0.0;
            for (std::size_t i : members)
                if (X[i][f] <= thr) {
                    gl += g[i];
                    hl += 1.0;
                }
            const double hr = h_sum - hl;
            if (hl < opt.min_child_weight || hr < opt.min_child_weight) continue;
            const double gain =
                0.5 * (objective(gl, hl) + objective(g_sum - gl, hr) - objective(g_sum, h_sum));
            if (gain > best_gain) {
                best_gain = gain;
                best_f = static_cast<int>(f);
                best_thr = thr;
            }
        }
    }
    if (best_f < 0) return node;

    std::vector<std::size_t> left, right;
    for (std::size_t i : members)
        (X[i][static_cast<std::size_t>(best_f)] <= best_thr ? left : right).push_back(i);
    node->feature = best_f;
    node->threshold = best_thr;
    node->left = oracle_fit_tree(X, g, left, opt, depth + 1);
    node->right = oracle_fit_tree(X, g, right, opt, depth + 1);
    return node;
}

/// Full boosting oracle: stagewise residual trees by brute force.
struct OracleBoost {
    double base = 0.0;
    double learning_rate = 1.0;
    std::vector<std::unique_ptr<OracleTree>> trees;

    double predict(const std::vector<double>& row) const {
        double acc = 0.0;
        for (const auto& t : trees) acc += t->predict(row);
        return base + learning_rate * acc;
    }
};

inline OracleBoost oracle_fit_boost(const std::vector<std::vector<double>>& X,
                                    const std::vector<double>& y, int stages,
                                    double learning_rate, const OracleTreeOptions& opt) {
    OracleBoost model;
    model.learning_rate = learning_rate;
    for (double v : y) model.base += v;
    model.base /= static_cast<double>(y.size());

    std::vector<double> pred(y.size(), model.base);
    std::vector<std::size_t> members(y.size());
    for (std::size_t i = 0; i < members.size(); ++i) members[i] = i;
    std::vector<double> g(y.size());
    for (int s = 0; s < stages; ++s) {
        for (std::size_t i = 0; i < y.size(); ++i) g[i] = pred[i] - y[i];
        auto tree = oracle_fit_tree(X, g, members, opt);
        for (std::size_t i = 0; i < y.size(); ++i)
            pred[i] += learning_rate * tree->predict(X[i]);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

/// Plain CART oracle: leaf means, variance-reduction splits, computed from
/// sums of squares directly.
inline std::unique_ptr<OracleTree> oracle_fit_cart(const std::vector<std::vector<double>>& X,
                                                   const std::vector<double>& y,
                                                   const std::vector<std::size_t>& members,
                                                   int min_samples_leaf, int max_depth = 0,
                                                   int depth = 0) {
    auto node = std::make_unique<OracleTree>();
    double sum = 0.0;
    for (std::size_t i : members) sum += y[i];
    node->value = sum / static_cast<double>(members.size());
    if ((max_depth > 0 && depth >= max_depth) || members.size() < 2) return node;

    auto sse = [&](const std::vector<std::size_t>& part) {
        double s = 0.0;
        for (std::size_t i : part) s += y[i];
        const double mean = s / static_cast<double>(part.size());
        double acc = 0.0;
        for (std::size_t i : part) acc += (y[i] - mean) * (y[i] - mean);
        return acc;
    };
    const double parent_sse = sse(members);
    const std::size_t d = X[0].size();
    double best_reduction = 0.0;
    int best_f = -1;
    double best_thr = 0.0;
    for (std::size_t f = 0; f < d; ++f) {
        std::vector<double> values;
        for (std::size_t i : members) values.push_back(X[i][f]);
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t k = 0; k + 1 < values.size(); ++k) {
            double thr = (values[k] + values[k + 1]) / 2.0;
            if (!(thr < values[k + 1])) thr = values[k];
            std::vector<std::size_t> l, r;
            for (std::size_t i : members) (X[i][f] <= thr ? l : r).push_back(i);
            if (l.size() < static_cast<std::size_t>(min_samples_leaf) ||
                r.size() < static_cast<std::size_t>(min_samples_leaf))
                continue;
            const double reduction = parent_sse - sse(l) - sse(r);
            if (reduction > best_reduction + 1e-12) {
                best_reduction = reduction;
                best_f = static_cast<int>(f);
                best_thr = thr;
            }
        }
    }
    if (best_f < 0) return node;
    std::vector<std::size_t> l, r;
    for (std::size_t i : members)
        (X[i][static_cast<std::size_t>(best_f)] <= best_thr ? l : r).push_back(i);
    node->feature = best_f;
    node->threshold = best_thr;
    node->left = oracle_fit_cart(X, y, l, min_samples_leaf, max_depth, depth + 1);
    node->right = oracle_fit_cart(X, y, r, min_samples_leaf, max_depth, depth + 1);
    return node;
}

inline std::unique_ptr<OracleTree> oracle_fit_cart(const std::vector<std::vector<double>>& X,
                                                   const std::vector<double>& y,
                                                   int min_samples_leaf, int max_depth = 0) {
    std::vector<std::size_t> members(y.size());
    for (std::size_t i = 0; i < members.size(); ++i) members[i] = i;
    return oracle_fit_cart(X, y, members, min_samples_leaf, max_depth);
}

// ---------------------------------------------------------------------------
// Least-squares oracle (closed form via QR).

struct LeastSquares {
    Eigen::VectorXd coef;  // last entry is the intercept

    double predict(std::span<const double> row) const {
        double acc = coef(coef.size() - 1);
        for (std::size_t c = 0; c < row.size(); ++c)
            acc += coef(static_cast<Eigen::Index>(c)) * row[c];
        return acc;
    }
};

inline LeastSquares fit_least_squares(const rollcast::RowMatrix& X,
                                      std::span<const double> y) {
    const auto n = static_cast<Eigen::Index>(X.n_rows);
    const auto d = static_cast<Eigen::Index>(X.n_cols);
    Eigen::MatrixXd A(n, d + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j)
            A(i, j) = X.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        A(i, d) = 1.0;
    }
    Eigen::Map<const Eigen::VectorXd> b(y.data(), n);
    LeastSquares ls;
    ls.coef = A.colPivHouseholderQr().solve(b);
    return ls;
}

// ---------------------------------------------------------------------------
// Brute-force SVR dual oracle: enumerate every activity pattern
// (-C / interior-negative / zero / interior-positive / +C per coefficient),
// solve the equality-constrained stationarity system of each pattern, keep
// feasible candidates, and return the best objective.

struct SvrOracleResult {
    std::vector<double> beta;
    double objective = std::numeric_limits<double>::infinity();
};

inline double svr_objective(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double eps,
                            const Eigen::VectorXd& beta) {
    return 0.5 * beta.dot(K * beta) - y.dot(beta) + eps * beta.cwiseAbs().sum();
}

inline SvrOracleResult svr_bruteforce(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                                      double C, double eps) {
    const int n = static_cast<int>(y.size());
    SvrOracleResult best;
    std::vector<int> pattern(static_cast<std::size_t>(n), 0);  // 0..4

    const int total = static_cast<int>(std::pow(5.0, n));
    for (int code = 0; code < total; ++code) {
        int rem = code;
        for (int i = 0; i < n; ++i) {
            pattern[static_cast<std::size_t>(i)] = rem % 5;
            rem /= 5;
        }
        // pattern: 0 -> -C, 1 -> interior negative, 2 -> zero,
        //          3 -> interior positive, 4 -> +C
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
        std::vector<int> free_idx;
        double fixed_sum = 0.0;
        for (int i = 0; i < n; ++i) {
            switch (pattern[static_cast<std::size_t>(i)]) {
                case 0: beta(i) = -C; fixed_sum += -C; break;
                case 4: beta(i) = C; fixed_sum += C; break;
                case 2: break;
                default: free_idx.push_back(i); break;
            }
        }
        if (free_idx.empty()) {
            if (std::abs(fixed_sum) > 1e-12) continue;
            const double obj = svr_objective(K, y, eps, beta);
            if (obj < best.objective) {
                best.objective = obj;
                best.beta.assign(beta.data(), beta.data() + n);
            }
            continue;
        }
        // Stationarity over the free coordinates with multiplier lambda:
        //   sum_j K_ij beta_j - y_i + eps*sign_i + lambda = 0, i free
        //   sum_i beta_i = 0
        const int m = static_cast<int>(free_idx.size());
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m + 1, m + 1);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
        for (int a = 0; a < m; ++a) {
            const int i = free_idx[static_cast<std::size_t>(a)];
            for (int b = 0; b < m; ++b) A(a, b) = K(i, free_idx[static_cast<std::size_t>(b)]);
            A(a, m) = 1.0;
            double fixed_part = 0.0;
            for (int jj = 0; jj < n; ++jj)
                if (pattern[static_cast<std::size_t>(jj)] == 0 ||
                    pattern[static_cast<std::size_t>(jj)] == 4)
                    fixed_part += K(i, jj) * beta(jj);
            const double sign =
                pattern[static_cast<std::size_t>(i)] == 3 ? 1.0 : -1.0;
            rhs(a) = y(i) - eps * sign - fixed_part;
            A(m, a) = 1.0;
        }
        rhs(m) = -fixed_sum;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (!lu.isInvertible()) continue;
        const Eigen::VectorXd sol = lu.solve(rhs);
        bool valid = true;
        for (int a = 0; a < m && valid; ++a) {
            const int i = free_idx[static_cast<std::size_t>(a)];
            const double v = sol(a);
            if (pattern[static_cast<std::size_t>(i)] == 3)
                valid = v > 0.0 && v < C;
            else
                valid = v < 0.0 && v > -C;
            beta(i) = v;
        }
        if (!valid) continue;
        const double obj = svr_objective(K, y, eps, beta);
        if (obj < best.objective) {
            best.objective = obj;
            best.beta.assign(beta.data(), beta.data() + n);
        }
    }
    return best;
}

inline Eigen::MatrixXd rbf_kernel_matrix(const rollcast::RowMatrix& X, double gamma) {
    const auto n = static_cast<Eigen::Index>(X.n_rows);
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            double sq = 0.0;
            for (std::size_t c = 0; c < X.n_cols; ++c) {
                const double diff = X.at(static_cast<std::size_t>(i), c) -
                                    X.at(static_cast<std::size_t>(j), c);
                sq += diff * diff;
            }
            K(i, j) = std::exp(-gamma * sq);
        }
    return K;
}

}  // namespace testutil
