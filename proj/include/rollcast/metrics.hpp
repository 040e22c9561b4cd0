#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "rollcast/errors.hpp"

namespace rollcast {

/// Aggregate of the four evaluation measures over one prediction set.
/// mape is stored as a fraction; reports additionally surface it as percent.
struct MetricSet {
    double rmse = 0.0;  // dollars
    double mape = 0.0;  // fraction
    double mpe = 0.0;   // dollars
    double mtt = 0.0;   // seconds
    std::size_t n = 0;       // paired intervals
    std::size_t n_rolls = 0; // training runs behind mtt
};

namespace detail {
inline void check_pair(std::span<const double> actuals, std::span<const double> predictions) {
    if (actuals.size() != predictions.size())
        throw LengthMismatch("actuals (" + std::to_string(actuals.size()) +
                             ") and predictions (" + std::to_string(predictions.size()) +
                             ") differ in length");
    if (actuals.empty()) throw EmptyInput("empty metric input");
}
}  // namespace detail

/// Root mean squared error, in dollars.
inline double rmse(std::span<const double> actuals, std::span<const double> predictions) {
    detail::check_pair(actuals, predictions);
    double acc = 0.0;
    for (std::size_t i = 0; i < actuals.size(); ++i) {
        const double e = actuals[i] - predictions[i];
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(actuals.size()));
}

/// Mean absolute percentage error, as a fraction of the actual value.
inline double mape(std::span<const double> actuals, std::span<const double> predictions) {
    detail::check_pair(actuals, predictions);
    double acc = 0.0;
    for (std::size_t i = 0; i < actuals.size(); ++i) {
        if (actuals[i] == 0.0)
            throw ZeroActual("actual value at index " + std::to_string(i) +
                             " is zero; prices must be nonzero");
        acc += std::abs(actuals[i] - predictions[i]) / std::abs(actuals[i]);
    }
    return acc / static_cast<double>(actuals.size());
}

/// Mean positive error: average over-prediction magnitude, in dollars.
inline double mpe(std::span<const double> actuals, std::span<const double> predictions) {
    detail::check_pair(actuals, predictions);
    double acc = 0.0;
    for (std::size_t i = 0; i < actuals.size(); ++i)
        acc += std::max(predictions[i] - actuals[i], 0.0);
    return acc / static_cast<double>(actuals.size());
}

/// Mean training time over per-roll durations, in seconds.
inline double mtt(std::span<const double> durations) {
    if (durations.empty()) throw EmptyInput("empty duration list");
    double acc = 0.0;
    for (double d : durations) acc += d;
    return acc / static_cast<double>(durations.size());
}

inline MetricSet metric_set(std::span<const double> actuals, std::span<const double> predictions,
                            std::span<const double> durations) {
    MetricSet m;
    m.rmse = rmse(actuals, predictions);
    m.mape = mape(actuals, predictions);
    m.mpe = mpe(actuals, predictions);
    m.mtt = mtt(durations);
    m.n = actuals.size();
    m.n_rolls = durations.size();
    return m;
}

}  // namespace rollcast
