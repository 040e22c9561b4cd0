#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rollcast/errors.hpp"
#include "rollcast/forest.hpp"
#include "rollcast/gbrt.hpp"
#include "rollcast/matrix.hpp"
#include "rollcast/mlp.hpp"
#include "rollcast/svr.hpp"

namespace rollcast {

enum class Algorithm { Gbrt = 0, RandomForest = 1, Mlp = 2, Svr = 3 };

inline const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Gbrt: return "gbrt";
        case Algorithm::RandomForest: return "random_forest";
        case Algorithm::Mlp: return "mlp";
        case Algorithm::Svr: return "svr";
    }
    return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
    if (s == "gbrt" || s == "xgboost") return Algorithm::Gbrt;
    if (s == "random_forest") return Algorithm::RandomForest;
    if (s == "mlp") return Algorithm::Mlp;
    if (s == "svr") return Algorithm::Svr;
    throw ParseError("unknown algorithm '" + s + "'");
}

/// Variant order matches the Algorithm enum values.
using Hyperparameters = std::variant<GbrtParams, ForestParams, MlpParams, SvrParams>;

struct ModelSpec {
    Hyperparameters hyperparameters = GbrtParams{};
    std::uint64_t seed = 0;

    Algorithm algorithm() const { return static_cast<Algorithm>(hyperparameters.index()); }

    void validate() const {
        std::visit([](const auto& p) { p.validate(); }, hyperparameters);
    }

    bool operator==(const ModelSpec&) const = default;
};

struct TrainOptions {
    int forest_threads = 0;  // 0 = internal heuristic; any value is bit-identical
    std::size_t svr_cache_bytes = std::size_t{256} << 20;
};

/// A fitted predictor plus its spec and the wall-clock training duration.
struct TrainedModel {
    ModelSpec spec;
    std::variant<GbrtModel, ForestModel, MlpModel, SvrModel> state;
    double train_duration = 0.0;  // seconds
    std::size_t feature_count = 0;

    std::vector<double> predict(const RowMatrix& X) const {
        if (X.n_rows > 0 && X.n_cols != feature_count)
            throw ColumnMismatch("model expects " + std::to_string(feature_count) +
                                 " columns, got " + std::to_string(X.n_cols));
        return std::visit([&](const auto& m) { return m.predict(X); }, state);
    }
};

/// Trains per the spec and records the fit's wall-clock duration. Identical
/// (spec, X, y) reproduce the fitted state bit-exactly at any thread count.
inline TrainedModel train(const ModelSpec& spec, const RowMatrix& X, std::span<const double> y,
                          const TrainOptions& options = {}) {
    spec.validate();
    if (X.n_rows < 2) throw DegenerateData("training needs at least 2 rows");
    if (y.size() != X.n_rows)
        throw DegenerateData("target length " + std::to_string(y.size()) +
                             " does not match row count " + std::to_string(X.n_rows));
    if (!X.all_finite()) throw DegenerateData("non-finite feature value");
    for (double v : y)
        if (!std::isfinite(v)) throw DegenerateData("non-finite target value");

    TrainedModel model;
    model.spec = spec;
    model.feature_count = X.n_cols;

    const auto t0 = std::chrono::steady_clock::now();
    switch (spec.algorithm()) {
        case Algorithm::Gbrt:
            model.state = fit_gbrt(std::get<GbrtParams>(spec.hyperparameters), X, y);
            break;
        case Algorithm::RandomForest:
            model.state = fit_forest(std::get<ForestParams>(spec.hyperparameters), X, y,
                                     spec.seed, options.forest_threads);
            break;
        case Algorithm::Mlp:
            model.state = fit_mlp(std::get<MlpParams>(spec.hyperparameters), X, y, spec.seed);
            break;
        case Algorithm::Svr:
            model.state = fit_svr(std::get<SvrParams>(spec.hyperparameters), X, y,
                                  options.svr_cache_bytes);
            break;
    }
    const auto t1 = std::chrono::steady_clock::now();
    model.train_duration = std::chrono::duration<double>(t1 - t0).count();
    return model;
}

}  // namespace rollcast
