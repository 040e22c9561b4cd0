#pragma once

#include <cstddef>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rollcast/calendar.hpp"
#include "rollcast/errors.hpp"
#include "rollcast/series.hpp"

namespace rollcast {

/// Per-column min/max fitted on training rows only. Construct through
/// fit_scaler so the training-window restriction is enforced by the API.
struct ScalerParams {
    std::vector<double> x_min;
    std::vector<double> x_max;

    std::size_t columns() const { return x_min.size(); }

    bool operator==(const ScalerParams&) const = default;
};

/// Shifts the exogenous columns back by `gap` intervals: output row t carries
/// the exogenous values of input row t - gap. The first `gap` rows, which
/// have no lagged value, are dropped; the target column is untouched.
inline AlignedPanel lag_shift(const AlignedPanel& panel, int gap) {
    if (gap < 1) throw TooShort("lag gap must be >= 1");
    const std::size_t g = static_cast<std::size_t>(gap);
    if (panel.size() <= g)
        throw TooShort("panel has " + std::to_string(panel.size()) +
                       " rows, need more than gap = " + std::to_string(gap));
    AlignedPanel out;
    out.calendar = panel.calendar;
    out.exog_names = panel.exog_names;
    out.stamps.assign(panel.stamps.begin() + g, panel.stamps.end());
    out.target.assign(panel.target.begin() + g, panel.target.end());
    out.exog.reserve(panel.exog.size());
    for (const auto& col : panel.exog)
        out.exog.emplace_back(col.begin(), col.end() - g);
    out.gap_fill_log = panel.gap_fill_log;
    return out;
}

/// Column-wise min/max over rows [row_begin, row_end) of the panel's
/// exogenous block.
inline ScalerParams fit_scaler(const AlignedPanel& panel, std::size_t row_begin,
                               std::size_t row_end) {
    if (row_begin >= row_end || row_end > panel.size())
        throw EmptyInput("scaler needs at least one training row");
    ScalerParams p;
    p.x_min.reserve(panel.n_exog());
    p.x_max.reserve(panel.n_exog());
    for (const auto& col : panel.exog) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t i = row_begin; i < row_end; ++i) {
            lo = std::min(lo, col[i]);
            hi = std::max(hi, col[i]);
        }
        p.x_min.push_back(lo);
        p.x_max.push_back(hi);
    }
    return p;
}

/// Overload for plain columns (used by tests and the matrix dump path).
inline ScalerParams fit_scaler(std::span<const std::vector<double>> columns) {
    ScalerParams p;
    for (const auto& col : columns) {
        if (col.empty()) throw EmptyInput("scaler needs at least one training row");
        double lo = col[0], hi = col[0];
        for (double v : col) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        p.x_min.push_back(lo);
        p.x_max.push_back(hi);
    }
    return p;
}

/// (x - x_min) / (x_max - x_min), per column. Constant columns map to 0.
/// Values outside the fitted range are deliberately not clamped, so test-row
/// outputs may fall outside [0, 1].
inline double apply_scaler_value(const ScalerParams& p, std::size_t column, double x) {
    const double lo = p.x_min[column], hi = p.x_max[column];
    if (hi == lo) return 0.0;
    return (x - lo) / (hi - lo);
}

inline std::vector<double> apply_scaler(const ScalerParams& p, std::span<const double> row) {
    if (row.size() != p.columns())
        throw ColumnMismatch("row has " + std::to_string(row.size()) + " columns, scaler has " +
                             std::to_string(p.columns()));
    std::vector<double> out(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) out[c] = apply_scaler_value(p, c, row[c]);
    return out;
}

/// Inverse of apply_scaler for non-constant columns.
inline double unscale_value(const ScalerParams& p, std::size_t column, double scaled) {
    const double lo = p.x_min[column], hi = p.x_max[column];
    return lo + scaled * (hi - lo);
}

/// Design matrix: scaled lag-shifted exogenous numerics followed by the
/// fixed-width calendar indicator block, with row-aligned dollar targets.
/// Column order is fixed: the panel's exogenous series in panel order, then
/// month, day-of-month, day-of-week, hour, minute-segment one-hots, then the
/// four session-half indicators.
struct FeatureMatrix {
    std::vector<IntervalStamp> stamps;
    std::vector<double> targets;
    std::vector<std::string> column_names;
    std::size_t n_numeric = 0;
    std::size_t n_calendar = 0;
    std::vector<double> data;  // row-major
    ScalerParams scaler;       // the params the numeric block was scaled with

    std::size_t rows() const { return stamps.size(); }
    std::size_t cols() const { return n_numeric + n_calendar; }
    std::span<const double> row(std::size_t i) const {
        return {data.data() + i * cols(), cols()};
    }

    FeatureMatrix slice(std::size_t first, std::size_t count) const {
        FeatureMatrix out;
        out.stamps.assign(stamps.begin() + first, stamps.begin() + first + count);
        out.targets.assign(targets.begin() + first, targets.begin() + first + count);
        out.column_names = column_names;
        out.n_numeric = n_numeric;
        out.n_calendar = n_calendar;
        out.scaler = scaler;
        out.data.assign(data.begin() + static_cast<std::ptrdiff_t>(first * cols()),
                        data.begin() + static_cast<std::ptrdiff_t>((first + count) * cols()));
        return out;
    }
};

/// How build_matrix obtains its scaler: fit on every post-lag row, fit on a
/// post-lag row range (the per-roll training window), or reuse fixed params.
struct FitOnAllRows {};
struct FitOnRowRange {
    std::size_t begin = 0;
    std::size_t end = 0;
};
using ScalerMode = std::variant<FitOnAllRows, FitOnRowRange, ScalerParams>;

inline FeatureMatrix build_matrix(const AlignedPanel& panel, const TradingCalendar& cal, int gap,
                                  const ScalerMode& mode) {
    AlignedPanel lagged = lag_shift(panel, gap);

    ScalerParams scaler;
    if (std::holds_alternative<FitOnAllRows>(mode)) {
        scaler = fit_scaler(lagged, 0, lagged.size());
    } else if (const auto* range = std::get_if<FitOnRowRange>(&mode)) {
        scaler = fit_scaler(lagged, range->begin, range->end);
    } else {
        scaler = std::get<ScalerParams>(mode);
        if (scaler.columns() != lagged.n_exog())
            throw ColumnMismatch("scaler has " + std::to_string(scaler.columns()) +
                                 " columns, panel has " + std::to_string(lagged.n_exog()));
    }

    FeatureMatrix m;
    m.stamps = lagged.stamps;
    m.targets = lagged.target;
    m.scaler = scaler;
    m.n_numeric = lagged.n_exog();
    m.n_calendar = static_cast<std::size_t>(CalendarFeatures::width(cal));
    m.column_names = lagged.exog_names;
    for (auto& name : CalendarFeatures::column_names(cal)) m.column_names.push_back(name);

    m.data.reserve(m.rows() * m.cols());
    std::vector<double> row;
    for (std::size_t i = 0; i < lagged.size(); ++i) {
        row.clear();
        for (std::size_t j = 0; j < lagged.n_exog(); ++j)
            row.push_back(apply_scaler_value(scaler, j, lagged.exog[j][i]));
        calendar_features(cal, lagged.stamps[i]).append_row(cal, row);
        m.data.insert(m.data.end(), row.begin(), row.end());
    }
    return m;
}

/// Debug/test dump: header names every column in the fixed order, stamp first,
/// target appended last. One row per stamp.
inline void write_matrix_csv(const FeatureMatrix& m, const TradingCalendar& cal,
                             std::ostream& out) {
    out << "stamp";
    for (const auto& name : m.column_names) out << ',' << name;
    out << ",target\n";
    char buf[32];
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out << to_string(cal, m.stamps[i]);
        for (double v : m.row(i)) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << ',' << buf;
        }
        std::snprintf(buf, sizeof(buf), "%.17g", m.targets[i]);
        out << ',' << buf << '\n';
    }
}

inline void write_matrix_csv(const FeatureMatrix& m, const TradingCalendar& cal,
                             const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_matrix_csv(m, cal, out);
}

}  // namespace rollcast
