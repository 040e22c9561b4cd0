#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rollcast/errors.hpp"
#include "rollcast/matrix.hpp"
#include "rollcast/rng.hpp"

namespace rollcast {

/// Feedforward rectifier network with a linear output trained on mean
/// squared error by mini-batch Adam. Hidden weights start Glorot-uniform
/// (scaled by init_scale); the output layer starts at zero weights with the
/// target mean as bias, which makes a constant-target fit an exact fixed
/// point and puts dollar-scale targets in reach of the optimizer from step
/// one.
struct MlpParams {
    std::vector<int> hidden_layers{64, 32};
    int epochs = 200;
    int batch_size = 32;
    double step_size = 1e-3;   // Adam step size
    double init_scale = 1.0;   // multiplies the Glorot bound; 0 = zero init

    void validate() const {
        for (int w : hidden_layers)
            if (w < 1) throw InvalidHyperparameters("mlp: hidden layer widths must be >= 1");
        if (epochs < 1) throw InvalidHyperparameters("mlp: epochs must be >= 1");
        if (batch_size < 1) throw InvalidHyperparameters("mlp: batch_size must be >= 1");
        if (!(step_size > 0.0)) throw InvalidHyperparameters("mlp: step_size must be > 0");
        if (init_scale < 0.0) throw InvalidHyperparameters("mlp: init_scale must be >= 0");
    }

    bool operator==(const MlpParams&) const = default;
};

struct MlpModel {
    MlpParams params;
    std::uint64_t seed = 0;
    std::size_t feature_count = 0;
    std::vector<Eigen::MatrixXd> weights;  // [layer] (fan_in x fan_out)
    std::vector<Eigen::VectorXd> biases;   // [layer] (fan_out)
    std::vector<double> epoch_losses;      // index 0 = before training

    Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const {
        Eigen::MatrixXd a = input;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            Eigen::MatrixXd z = (a * weights[l]).rowwise() + biases[l].transpose();
            if (l + 1 < weights.size()) z = z.cwiseMax(0.0);
            a = std::move(z);
        }
        return a;
    }

    std::vector<double> predict(const RowMatrix& X) const {
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
            input(X.data, static_cast<Eigen::Index>(X.n_rows),
                  static_cast<Eigen::Index>(X.n_cols));
        Eigen::MatrixXd out = forward(input);
        return {out.data(), out.data() + out.rows()};
    }
};

struct MlpGradients {
    std::vector<Eigen::MatrixXd> d_weights;
    std::vector<Eigen::VectorXd> d_biases;
};

namespace detail {

/// Mean squared error over the rows: (1/m) * sum (pred - y)^2.
inline double mlp_batch_loss(const MlpModel& model, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& y) {
    Eigen::MatrixXd pred = model.forward(X);
    return (pred.col(0) - y).squaredNorm() / static_cast<double>(X.rows());
}

/// Backpropagation on one batch. Returns gradients of the batch MSE with
/// respect to every weight and bias.
inline MlpGradients mlp_batch_gradients(const MlpModel& model, const Eigen::MatrixXd& X,
                                        const Eigen::VectorXd& y) {
    const std::size_t n_layers = model.weights.size();
    std::vector<Eigen::MatrixXd> activations(n_layers + 1);
    std::vector<Eigen::MatrixXd> pre_activations(n_layers);
    activations[0] = X;
    for (std::size_t l = 0; l < n_layers; ++l) {
        pre_activations[l] =
            (activations[l] * model.weights[l]).rowwise() + model.biases[l].transpose();
        activations[l + 1] = l + 1 < n_layers ? pre_activations[l].cwiseMax(0.0).eval()
                                              : pre_activations[l];
    }

    MlpGradients grads;
    grads.d_weights.resize(n_layers);
    grads.d_biases.resize(n_layers);
    const double m = static_cast<double>(X.rows());
    Eigen::MatrixXd delta = 2.0 / m * (activations[n_layers].col(0) - y);
    for (std::size_t l = n_layers; l-- > 0;) {
        grads.d_weights[l].noalias() = activations[l].transpose() * delta;
        grads.d_biases[l] = delta.colwise().sum().transpose();
        if (l > 0) {
            Eigen::MatrixXd back = delta * model.weights[l].transpose();
            delta = back.cwiseProduct(
                (pre_activations[l - 1].array() > 0.0).cast<double>().matrix());
        }
    }
    return grads;
}

}  // namespace detail

inline double mlp_loss(const MlpModel& model, const RowMatrix& X, std::span<const double> y) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        input(X.data, static_cast<Eigen::Index>(X.n_rows), static_cast<Eigen::Index>(X.n_cols));
    Eigen::Map<const Eigen::VectorXd> target(y.data(), static_cast<Eigen::Index>(y.size()));
    return detail::mlp_batch_loss(model, input, target);
}

inline MlpGradients mlp_gradients(const MlpModel& model, const RowMatrix& X,
                                  std::span<const double> y) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        input(X.data, static_cast<Eigen::Index>(X.n_rows), static_cast<Eigen::Index>(X.n_cols));
    Eigen::Map<const Eigen::VectorXd> target(y.data(), static_cast<Eigen::Index>(y.size()));
    return detail::mlp_batch_gradients(model, input, target);
}

/// Fresh network state: Glorot-uniform hidden weights scaled by init_scale,
/// zero output weights, output bias preset to `output_bias` (the trainer
/// passes the target mean).
inline MlpModel init_mlp(const MlpParams& params, std::size_t feature_count, double output_bias,
                         std::uint64_t seed) {
    params.validate();
    MlpModel model;
    model.params = params;
    model.seed = seed;
    model.feature_count = feature_count;

    std::vector<std::size_t> sizes{feature_count};
    for (int w : params.hidden_layers) sizes.push_back(static_cast<std::size_t>(w));
    sizes.push_back(1);
    const std::size_t n_layers = sizes.size() - 1;

    for (std::size_t l = 0; l < n_layers; ++l) {
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sizes[l]),
                                                  static_cast<Eigen::Index>(sizes[l + 1]));
        Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sizes[l + 1]));
        if (l + 1 < n_layers) {
            Rng rng(seed, l + 1);
            const double bound = params.init_scale *
                                 std::sqrt(6.0 / static_cast<double>(sizes[l] + sizes[l + 1]));
            for (Eigen::Index r = 0; r < w.rows(); ++r)
                for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
        } else {
            b(0) = output_bias;  // zero output weights: constants are a fixed point
        }
        model.weights.push_back(std::move(w));
        model.biases.push_back(std::move(b));
    }
    return model;
}

inline MlpModel fit_mlp(const MlpParams& params, const RowMatrix& X, std::span<const double> y,
                        std::uint64_t seed) {
    params.validate();
    const std::size_t n = X.n_rows;
    const std::size_t d = X.n_cols;

    double y_mean = 0.0;
    for (double v : y) y_mean += v;
    y_mean /= static_cast<double>(n);

    MlpModel model = init_mlp(params, d, y_mean, seed);
    const std::size_t n_layers = model.weights.size();

    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        all_rows(X.data, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    Eigen::Map<const Eigen::VectorXd> all_targets(y.data(), static_cast<Eigen::Index>(n));

    auto record_loss = [&](int epoch) {
        const double loss = detail::mlp_batch_loss(model, all_rows, all_targets);
        if (!std::isfinite(loss))
            throw NonFiniteLoss("mlp: non-finite training loss at epoch " +
                                std::to_string(epoch));
        model.epoch_losses.push_back(loss);
    };
    record_loss(0);

    // Adam state.
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    for (std::size_t l = 0; l < n_layers; ++l) {
        mw.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
        vw.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
        mb.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
        vb.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
    }
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    long step = 0;

    Rng shuffle_rng(seed, 0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    const std::size_t batch = static_cast<std::size_t>(params.batch_size);
    Eigen::MatrixXd bx;
    Eigen::VectorXd by;
    for (int epoch = 1; epoch <= params.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(shuffle_rng.below(i));
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t m = std::min(batch, n - start);
            bx.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
            by.resize(static_cast<Eigen::Index>(m));
            for (std::size_t r = 0; r < m; ++r) {
                bx.row(static_cast<Eigen::Index>(r)) =
                    all_rows.row(static_cast<Eigen::Index>(order[start + r]));
                by(static_cast<Eigen::Index>(r)) = y[order[start + r]];
            }
            MlpGradients grads = detail::mlp_batch_gradients(model, bx, by);
            ++step;
            const double corr1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double corr2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t l = 0; l < n_layers; ++l) {
                mw[l] = beta1 * mw[l] + (1.0 - beta1) * grads.d_weights[l];
                vw[l] = beta2 * vw[l] +
                        (1.0 - beta2) * grads.d_weights[l].cwiseProduct(grads.d_weights[l]);
                model.weights[l].array() -=
                    params.step_size * (mw[l].array() / corr1) /
                    ((vw[l].array() / corr2).sqrt() + adam_eps);
                mb[l] = beta1 * mb[l] + (1.0 - beta1) * grads.d_biases[l];
                vb[l] = beta2 * vb[l] +
                        (1.0 - beta2) * grads.d_biases[l].cwiseProduct(grads.d_biases[l]);
                model.biases[l].array() -= params.step_size * (mb[l].array() / corr1) /
                                           ((vb[l].array() / corr2).sqrt() + adam_eps);
            }
        }
        record_loss(epoch);
    }
    return model;
}

}  // namespace rollcast
