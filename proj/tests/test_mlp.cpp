#include "rollcast/mlp.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "testutil.hpp"

using namespace rollcast;
using testutil::make_dense;

namespace {

/// Central finite differences over every parameter of the network.
double max_gradient_relative_error(MlpModel& model, const RowMatrix& X,
                                   std::span<const double> y, double step = 1e-6) {
    const MlpGradients analytic = mlp_gradients(model, X, y);
    double worst = 0.0;
    auto probe = [&](double& param, double analytic_grad) {
        const double saved = param;
        param = saved + step;
        const double up = mlp_loss(model, X, y);
        param = saved - step;
        const double down = mlp_loss(model, X, y);
        param = saved;
        const double fd = (up - down) / (2.0 * step);
        const double denom = std::max({1e-8, std::abs(fd), std::abs(analytic_grad)});
        worst = std::max(worst, std::abs(fd - analytic_grad) / denom);
    };
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        for (Eigen::Index r = 0; r < model.weights[l].rows(); ++r)
            for (Eigen::Index c = 0; c < model.weights[l].cols(); ++c)
                probe(model.weights[l](r, c), analytic.d_weights[l](r, c));
        for (Eigen::Index r = 0; r < model.biases[l].size(); ++r)
            probe(model.biases[l](r), analytic.d_biases[l](r));
    }
    return worst;
}

struct GradFixture {
    testutil::DenseData X = testutil::random_dense(3, 3, 101, -1.0, 1.0);
    std::vector<double> y{0.7, -0.3, 1.2};
};

TEST(Mlp, GradientCheckAtRandomInitialization) {
    GradFixture f;
    MlpParams p;
    p.hidden_layers = {4, 3};
    MlpModel model = init_mlp(p, 3, 0.5, 5);
    EXPECT_LT(max_gradient_relative_error(model, f.X.view(), f.y), 1e-5);
}

TEST(Mlp, GradientCheckAfterTenEpochs) {
    GradFixture f;
    MlpParams p;
    p.hidden_layers = {4, 3};
    p.epochs = 10;
    p.batch_size = 2;
    MlpModel model = fit_mlp(p, f.X.view(), f.y, 6);
    EXPECT_LT(max_gradient_relative_error(model, f.X.view(), f.y), 1e-5);
}

TEST(Mlp, LinearModelReachesLeastSquaresFit) {
    // Zero hidden layers on exactly linear noiseless data: training RMSE
    // must drop below 1e-3 and agree with the closed-form solution's zero
    // residual.
    auto X = testutil::random_dense(512, 3, 33);
    std::vector<double> y(512);
    for (std::size_t i = 0; i < y.size(); ++i)
        y[i] = 0.8 * X.at(i, 0) - 0.5 * X.at(i, 1) + 0.3 * X.at(i, 2) + 0.25;
    MlpParams p;
    p.hidden_layers = {};
    MlpModel model = fit_mlp(p, X.view(), y, 7);

    auto ls = testutil::fit_least_squares(X.view(), y);
    double ls_sse = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = ls.predict(X.view().row(i)) - y[i];
        ls_sse += e * e;
    }
    EXPECT_LT(std::sqrt(ls_sse / 512.0), 1e-9);  // the oracle fits exactly

    const double train_rmse = std::sqrt(model.epoch_losses.back());
    EXPECT_LT(train_rmse, 1e-3);
}

TEST(Mlp, ZeroTargetsZeroInitHasZeroInitialLoss) {
    auto X = testutil::random_dense(10, 3, 44);
    std::vector<double> y(10, 0.0);
    MlpParams p;
    p.hidden_layers = {5};
    p.init_scale = 0.0;
    p.epochs = 1;
    MlpModel model = fit_mlp(p, X.view(), y, 1);
    EXPECT_EQ(model.epoch_losses.front(), 0.0);
}

TEST(Mlp, ConstantTargetsAreFixedPoint) {
    auto X = testutil::random_dense(12, 4, 50);
    std::vector<double> y(12, 123.75);
    MlpParams p;
    p.epochs = 5;
    MlpModel model = fit_mlp(p, X.view(), y, 3);
    for (double v : model.predict(X.view())) EXPECT_NEAR(v, 123.75, 1e-6);
    for (double loss : model.epoch_losses) EXPECT_NEAR(loss, 0.0, 1e-12);
}

TEST(Mlp, EpochLossesRecordedPerEpoch) {
    auto X = testutil::random_dense(16, 2, 60);
    Rng rng(61);
    std::vector<double> y(16);
    for (auto& v : y) v = rng.uniform(0, 1);
    MlpParams p;
    p.epochs = 7;
    MlpModel model = fit_mlp(p, X.view(), y, 4);
    EXPECT_EQ(model.epoch_losses.size(), 8u);  // initial + one per epoch
}

TEST(Mlp, DivergenceRaisesNonFiniteLoss) {
    auto X = testutil::random_dense(16, 2, 70);
    Rng rng(71);
    std::vector<double> y(16);
    for (auto& v : y) v = rng.uniform(0, 1);
    MlpParams p;
    p.step_size = 1e200;
    p.epochs = 5;
    EXPECT_THROW(fit_mlp(p, X.view(), y, 4), NonFiniteLoss);
}

TEST(Mlp, DeterministicRefit) {
    auto X = testutil::random_dense(20, 3, 80);
    Rng rng(81);
    std::vector<double> y(20);
    for (auto& v : y) v = rng.uniform(0, 5);
    MlpParams p;
    p.epochs = 12;
    MlpModel a = fit_mlp(p, X.view(), y, 42);
    MlpModel b = fit_mlp(p, X.view(), y, 42);
    auto pa = a.predict(X.view()), pb = b.predict(X.view());
    for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i], pb[i]);
    MlpModel c = fit_mlp(p, X.view(), y, 43);
    EXPECT_NE(a.predict(X.view()), c.predict(X.view()));
}

TEST(Mlp, EmptyQueryGivesEmptyPredictions) {
    auto X = testutil::random_dense(8, 2, 90);
    std::vector<double> y(8, 1.0);
    MlpParams p;
    p.epochs = 1;
    MlpModel model = fit_mlp(p, X.view(), y, 1);
    RowMatrix empty{nullptr, 0, 2};
    EXPECT_TRUE(model.predict(empty).empty());
}

TEST(Mlp, HyperparameterValidation) {
    auto X = make_dense({{1.0}, {2.0}});
    std::vector<double> y{1, 2};
    MlpParams p;
    p.hidden_layers = {0};
    EXPECT_THROW(fit_mlp(p, X.view(), y, 1), InvalidHyperparameters);
    p = {};
    p.epochs = 0;
    EXPECT_THROW(fit_mlp(p, X.view(), y, 1), InvalidHyperparameters);
    p = {};
    p.batch_size = 0;
    EXPECT_THROW(fit_mlp(p, X.view(), y, 1), InvalidHyperparameters);
    p = {};
    p.step_size = 0.0;
    EXPECT_THROW(fit_mlp(p, X.view(), y, 1), InvalidHyperparameters);
}

}  // namespace
