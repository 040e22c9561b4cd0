#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <list>
#include <span>
#include <unordered_map>
#include <vector>

#include "rollcast/errors.hpp"
#include "rollcast/matrix.hpp"

namespace rollcast {

/// Epsilon-insensitive RBF support vector regression. The dual over
/// beta_i = alpha_i - alpha_i* is solved by sequential pairwise optimization:
/// repeatedly pick the maximal KKT-violating pair, solve the 2-variable
/// piecewise-quadratic subproblem exactly, and update the cached gradient.
struct SvrParams {
    double C = 10.0;          // box constraint, beta in [-C, C]
    double epsilon = 0.1;     // insensitivity tube, dollars
    double gamma = 0.0;       // RBF width; 0 means 1/feature_count
    double tolerance = 1e-3;  // maximal allowed KKT violation
    long max_passes = 10'000'000;  // pair-update cap

    void validate() const {
        if (!(C > 0.0)) throw InvalidHyperparameters("svr: C must be > 0");
        if (epsilon < 0.0) throw InvalidHyperparameters("svr: epsilon must be >= 0");
        if (gamma < 0.0) throw InvalidHyperparameters("svr: gamma must be >= 0");
        if (!(tolerance > 0.0)) throw InvalidHyperparameters("svr: tolerance must be > 0");
        if (max_passes < 1) throw InvalidHyperparameters("svr: max_passes must be >= 1");
    }

    bool operator==(const SvrParams&) const = default;
};

struct SvrModel {
    SvrParams params;
    double gamma_effective = 0.0;
    std::size_t feature_count = 0;
    std::vector<double> support_vectors;  // row-major n_sv x d
    std::vector<double> beta;             // per support vector, nonzero
    std::vector<double> sv_targets;       // training targets of the SVs
    double bias = 0.0;
    bool converged = false;
    long iterations = 0;
    double final_violation = 0.0;

    std::size_t n_support() const { return beta.size(); }

    double kernel(std::span<const double> a, std::span<const double> b) const {
        double sq = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double diff = a[k] - b[k];
            sq += diff * diff;
        }
        return std::exp(-gamma_effective * sq);
    }

    double predict_row(std::span<const double> row) const {
        double acc = bias;
        for (std::size_t s = 0; s < n_support(); ++s) {
            std::span<const double> sv{support_vectors.data() + s * feature_count,
                                       feature_count};
            acc += beta[s] * kernel(sv, row);
        }
        return acc;
    }

    std::vector<double> predict(const RowMatrix& X) const {
        std::vector<double> out(X.n_rows);
        for (std::size_t i = 0; i < X.n_rows; ++i) out[i] = predict_row(X.row(i));
        return out;
    }
};

/// Dual objective W(beta) = 1/2 b'Kb - y'b + eps*||b||_1, computable from the
/// support set alone since zero coefficients contribute nothing.
inline double svr_dual_objective(const SvrModel& m) {
    const std::size_t ns = m.n_support();
    double quad = 0.0, lin = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < ns; ++i) {
        std::span<const double> xi{m.support_vectors.data() + i * m.feature_count,
                                   m.feature_count};
        for (std::size_t j = 0; j < ns; ++j) {
            std::span<const double> xj{m.support_vectors.data() + j * m.feature_count,
                                       m.feature_count};
            quad += m.beta[i] * m.beta[j] * m.kernel(xi, xj);
        }
        lin += m.beta[i] * m.sv_targets[i];
        l1 += std::abs(m.beta[i]);
    }
    return 0.5 * quad - lin + m.params.epsilon * l1;
}

namespace detail {

/// LRU cache of full kernel columns.
class KernelColumnCache {
public:
    KernelColumnCache(const RowMatrix& X, double gamma, std::size_t budget_bytes)
        : X_(X.data, static_cast<Eigen::Index>(X.n_rows), static_cast<Eigen::Index>(X.n_cols)),
          gamma_(gamma) {
        sq_norms_ = X_.rowwise().squaredNorm();
        max_columns_ = std::max<std::size_t>(2, budget_bytes / (X.n_rows * sizeof(double)));
    }

    const Eigen::VectorXd& column(std::size_t i) {
        auto it = cache_.find(i);
        if (it != cache_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second.first);
            return it->second.second;
        }
        if (cache_.size() >= max_columns_) {
            cache_.erase(lru_.back());
            lru_.pop_back();
        }
        Eigen::VectorXd col =
            (-gamma_ *
             (sq_norms_.array() + sq_norms_(static_cast<Eigen::Index>(i)) -
              2.0 * (X_ * X_.row(static_cast<Eigen::Index>(i)).transpose()).array()))
                .exp();
        lru_.push_front(i);
        auto [pos, inserted] = cache_.emplace(i, std::make_pair(lru_.begin(), std::move(col)));
        return pos->second.second;
    }

    double diagonal(std::size_t) const { return 1.0; }  // RBF: k(x, x) = 1

private:
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X_;
    double gamma_;
    Eigen::VectorXd sq_norms_;
    std::size_t max_columns_;
    std::list<std::size_t> lru_;
    std::unordered_map<std::size_t, std::pair<std::list<std::size_t>::iterator, Eigen::VectorXd>>
        cache_;
};

}  // namespace detail

inline SvrModel fit_svr(const SvrParams& params, const RowMatrix& X, std::span<const double> y,
                        std::size_t cache_bytes = std::size_t{256} << 20) {
    params.validate();
    const std::size_t n = X.n_rows;
    const double C = params.C;
    const double eps = params.epsilon;

    SvrModel model;
    model.params = params;
    model.feature_count = X.n_cols;
    model.gamma_effective =
        params.gamma > 0.0 ? params.gamma : 1.0 / static_cast<double>(X.n_cols);

    detail::KernelColumnCache cache(X, model.gamma_effective, cache_bytes);

    std::vector<double> beta(n, 0.0);
    std::vector<double> grad(n);  // (K beta)_i - y_i
    for (std::size_t i = 0; i < n; ++i) grad[i] = -y[i];

    // Directional derivatives of the nonsmooth dual:
    //   up(i)   = grad_i + eps * (beta_i >= 0 ? +1 : -1)   (increase beta_i)
    //   down(j) = grad_j + eps * (beta_j >  0 ? +1 : -1)   (decrease beta_j)
    // KKT holds when min over feasible-up of up >= max over feasible-down of
    // down, within tolerance.
    auto select_pair = [&](std::size_t& i_up, std::size_t& j_down, double& violation) {
        double best_up = std::numeric_limits<double>::infinity();
        double best_down = -std::numeric_limits<double>::infinity();
        i_up = n;
        j_down = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (beta[i] < C) {
                const double up = grad[i] + (beta[i] >= 0.0 ? eps : -eps);
                if (up < best_up) {
                    best_up = up;
                    i_up = i;
                }
            }
            if (beta[i] > -C) {
                const double down = grad[i] + (beta[i] > 0.0 ? eps : -eps);
                if (down > best_down) {
                    best_down = down;
                    j_down = i;
                }
            }
        }
        violation = best_down - best_up;
    };

    long iter = 0;
    double violation = 0.0;
    std::size_t i = n, j = n;
    while (true) {
        select_pair(i, j, violation);
        if (!(violation > params.tolerance)) {
            model.converged = true;
            break;
        }
        if (iter >= params.max_passes) break;
        ++iter;

        const Eigen::VectorXd& col_i = cache.column(i);
        const Eigen::VectorXd& col_j = cache.column(j);
        const double eta = 2.0 - 2.0 * col_i(static_cast<Eigen::Index>(j));
        const double slope0 = grad[i] - grad[j];

        // delta moves mass from j to i: beta_i += delta, beta_j -= delta.
        const double delta_hi = std::min(C - beta[i], beta[j] + C);
        auto piecewise_cost = [&](double delta) {
            return 0.5 * eta * delta * delta + slope0 * delta +
                   eps * (std::abs(beta[i] + delta) - std::abs(beta[i])) +
                   eps * (std::abs(beta[j] - delta) - std::abs(beta[j]));
        };
        // Candidates: breakpoints where either coefficient crosses zero, the
        // per-piece unconstrained minima, and the box edge.
        double candidates[8];
        int n_cand = 0;
        candidates[n_cand++] = delta_hi;
        if (beta[i] < 0.0 && -beta[i] < delta_hi) candidates[n_cand++] = -beta[i];
        if (beta[j] > 0.0 && beta[j] < delta_hi) candidates[n_cand++] = beta[j];
        if (eta > 0.0) {
            for (double si : {-1.0, 1.0})
                for (double sj : {-1.0, 1.0}) {
                    const double stat = -(slope0 + eps * (si + sj)) / eta;
                    if (stat > 0.0 && stat < delta_hi &&
                        (beta[i] + stat) * si >= 0.0 && (beta[j] - stat) * -sj >= 0.0)
                        candidates[n_cand++] = stat;
                }
        }
        double best_delta = 0.0, best_cost = 0.0;
        for (int c = 0; c < n_cand; ++c) {
            const double cost = piecewise_cost(candidates[c]);
            if (cost < best_cost) {
                best_cost = cost;
                best_delta = candidates[c];
            }
        }
        if (best_delta <= 0.0) {
            // Numerically stuck pair; treat as converged at this violation.
            break;
        }
        beta[i] += best_delta;
        beta[j] -= best_delta;
        for (std::size_t k = 0; k < n; ++k)
            grad[k] += best_delta * (col_i(static_cast<Eigen::Index>(k)) -
                                     col_j(static_cast<Eigen::Index>(k)));
    }
    model.iterations = iter;
    model.final_violation = std::max(violation, 0.0);

    // Bias from KKT-interior points; otherwise the midpoint of the feasible
    // multiplier interval.
    double interior_sum = 0.0;
    std::size_t interior_count = 0;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        const double up = grad[k] + (beta[k] >= 0.0 ? eps : -eps);
        const double down = grad[k] + (beta[k] > 0.0 ? eps : -eps);
        if (beta[k] != 0.0 && std::abs(beta[k]) < C) {
            interior_sum += grad[k] + (beta[k] > 0.0 ? eps : -eps);
            ++interior_count;
        }
        if (beta[k] < C) hi = std::min(hi, up);
        if (beta[k] > -C) lo = std::max(lo, down);
    }
    double lambda;
    if (interior_count > 0)
        lambda = interior_sum / static_cast<double>(interior_count);
    else
        lambda = 0.5 * (lo + hi);
    model.bias = -lambda;

    for (std::size_t k = 0; k < n; ++k) {
        if (beta[k] == 0.0) continue;
        model.beta.push_back(beta[k]);
        model.sv_targets.push_back(y[k]);
        auto row = X.row(k);
        model.support_vectors.insert(model.support_vectors.end(), row.begin(), row.end());
    }
    return model;
}

}  // namespace rollcast
