#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rollcast/calendar.hpp"
#include "rollcast/errors.hpp"

namespace rollcast {

struct BarObservation {
    IntervalStamp stamp;
    double value = 0.0;

    bool operator==(const BarObservation&) const = default;
};

/// Raw per-instrument series of 15-minute bar values, strictly increasing in
/// time, all values finite and positive.
struct BarSeries {
    std::string symbol;
    std::vector<BarObservation> observations;
};

namespace detail {

inline bool split2(std::string_view line, std::string_view& a, std::string_view& b) {
    auto comma = line.find(',');
    if (comma == std::string_view::npos) return false;
    a = line.substr(0, comma);
    b = line.substr(comma + 1);
    return b.find(',') == std::string_view::npos;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

}  // namespace detail

/// Loads one bar CSV (header `timestamp,value`; timestamps YYYY-MM-DDTHH:MM in
/// the calendar's session clock). Rows that fall on non-trading days or off
/// the 15-minute slot grid are skipped and reported through `diagnostics`,
/// one row-numbered message each. Malformed rows, non-increasing stamps and
/// non-positive values abort the load.
inline BarSeries load_bars(const std::string& path, const std::string& symbol,
                           const TradingCalendar& cal,
                           std::vector<std::string>* diagnostics = nullptr) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open bar file '" + path + "'");

    auto fail = [&](int lineno, const std::string& msg) {
        return path + ":" + std::to_string(lineno) + ": " + msg;
    };

    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw ParseError(fail(1, "empty file, expected header"));
    ++lineno;
    if (detail::trim(line) != "timestamp,value")
        throw ParseError(fail(lineno, "expected header 'timestamp,value'"));

    BarSeries series{symbol, {}};
    bool have_prev = false;
    IntervalStamp prev{};
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view row = detail::trim(line);
        if (row.empty()) continue;
        std::string_view ts, val;
        if (!detail::split2(row, ts, val))
            throw ParseError(fail(lineno, "expected exactly two comma-separated fields"));
        ts = detail::trim(ts);
        val = detail::trim(val);

        if (ts.size() != 16 || ts[10] != 'T')
            throw ParseError(fail(lineno, "invalid timestamp '" + std::string(ts) +
                                              "', expected YYYY-MM-DDTHH:MM"));
        auto date = try_parse_date(ts.substr(0, 10));
        if (!date)
            throw ParseError(fail(lineno, "invalid date in timestamp '" + std::string(ts) + "'"));
        auto tod = parse_time_of_day(ts.substr(11, 5));

        std::string vstr(val);
        char* end = nullptr;
        double value = std::strtod(vstr.c_str(), &end);
        if (vstr.empty() || end != vstr.c_str() + vstr.size() || !std::isfinite(value))
            throw ParseError(fail(lineno, "invalid value '" + vstr + "'"));
        if (value <= 0.0)
            throw NonPositiveValue(fail(lineno, "non-positive value " + vstr));

        if (!cal.is_trading_day(*date)) {
            if (diagnostics)
                diagnostics->push_back(fail(lineno, to_string(*date) +
                                                        " is not a trading day; row skipped"));
            continue;
        }
        const auto offset = tod - cal.session_open();
        const int minutes = static_cast<int>(offset.count());
        if (minutes < 0 || minutes % cal.interval_minutes() != 0 ||
            minutes / cal.interval_minutes() >= cal.slots_per_day()) {
            if (diagnostics)
                diagnostics->push_back(fail(lineno, std::string(ts) +
                                                        " is not on the session slot grid; row skipped"));
            continue;
        }
        IntervalStamp stamp{*date, minutes / cal.interval_minutes()};
        if (have_prev && stamp <= prev)
            throw NonMonotonic(fail(lineno, "timestamp " + std::string(ts) +
                                                " does not increase over the previous row"));
        prev = stamp;
        have_prev = true;
        series.observations.push_back({stamp, value});
    }
    return series;
}

struct GapFill {
    std::string series;
    IntervalStamp stamp;
    std::string method;  // "forward_fill"

    bool operator==(const GapFill&) const = default;
};

/// Target plus exogenous series on the common calendar grid: rectangular by
/// construction, one value per series per stamp. gap_fill_log is an audit
/// sidecar and excluded from panel equality.
struct AlignedPanel {
    TradingCalendar calendar;
    std::vector<IntervalStamp> stamps;
    std::vector<double> target;
    std::vector<std::string> exog_names;
    std::vector<std::vector<double>> exog;  // [series][row]
    std::vector<GapFill> gap_fill_log;

    std::size_t size() const { return stamps.size(); }
    std::size_t n_exog() const { return exog.size(); }

    bool operator==(const AlignedPanel& other) const {
        return calendar == other.calendar && stamps == other.stamps && target == other.target &&
               exog_names == other.exog_names && exog == other.exog;
    }

    /// Copy of rows [first, first + count).
    AlignedPanel slice(std::size_t first, std::size_t count) const {
        AlignedPanel out;
        out.calendar = calendar;
        out.exog_names = exog_names;
        out.stamps.assign(stamps.begin() + first, stamps.begin() + first + count);
        out.target.assign(target.begin() + first, target.begin() + first + count);
        out.exog.reserve(exog.size());
        for (const auto& col : exog)
            out.exog.emplace_back(col.begin() + first, col.begin() + first + count);
        return out;
    }

    /// Series values re-wrapped as BarSeries (used by the align idempotence
    /// property and tests).
    BarSeries as_bar_series(const std::string& name) const {
        const std::vector<double>* col = nullptr;
        if (name == "target" || exog_names.empty()) col = &target;
        for (std::size_t j = 0; j < exog_names.size(); ++j)
            if (exog_names[j] == name) col = &exog[j];
        if (!col) throw Error("unknown series '" + name + "'");
        BarSeries s{name, {}};
        s.observations.reserve(stamps.size());
        for (std::size_t i = 0; i < stamps.size(); ++i)
            s.observations.push_back({stamps[i], (*col)[i]});
        return s;
    }
};

/// Aligns the target and exogenous series onto the calendar grid over
/// [span_start, span_end]. Interior and trailing gaps are forward-filled from
/// the most recent prior value of the same series (observations before the
/// span seed the fill) and logged; leading stamps where any series still has
/// no value are dropped for all series.
inline AlignedPanel align(const BarSeries& target, std::span<const BarSeries> exogenous,
                          const TradingCalendar& cal, Date span_start, Date span_end) {
    bool target_in_span = std::any_of(
        target.observations.begin(), target.observations.end(), [&](const BarObservation& o) {
            return o.stamp.date >= span_start && o.stamp.date <= span_end;
        });
    if (!target_in_span)
        throw EmptyIntersection("target series '" + target.symbol +
                                "' has no observations inside the span");

    std::vector<IntervalStamp> grid;
    for (Date d : trading_days(cal, span_start, span_end))
        for (int s = 0; s < cal.slots_per_day(); ++s) grid.push_back({d, s});

    const std::size_t n_series = exogenous.size() + 1;
    std::vector<const BarSeries*> all(n_series);
    all[0] = &target;
    for (std::size_t j = 0; j < exogenous.size(); ++j) all[j + 1] = &exogenous[j];

    std::vector<std::vector<double>> values(n_series, std::vector<double>(grid.size()));
    std::vector<std::vector<bool>> present(n_series, std::vector<bool>(grid.size(), false));
    std::vector<std::vector<bool>> filled(n_series, std::vector<bool>(grid.size(), false));

    for (std::size_t j = 0; j < n_series; ++j) {
        const auto& obs = all[j]->observations;
        std::size_t k = 0;
        bool have_last = false;
        double last = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            bool exact = false;
            while (k < obs.size() && obs[k].stamp <= grid[i]) {
                last = obs[k].value;
                have_last = true;
                exact = obs[k].stamp == grid[i];
                ++k;
            }
            if (!have_last) continue;  // leading gap
            values[j][i] = last;
            present[j][i] = true;
            filled[j][i] = !exact;
        }
    }

    // Head-truncate to the first stamp where every series has a value.
    std::size_t first = grid.size();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        bool complete = true;
        for (std::size_t j = 0; j < n_series; ++j) complete = complete && present[j][i];
        if (complete) {
            first = i;
            break;
        }
    }
    if (first == grid.size())
        throw EmptyIntersection("no stamp carries a value for every series after alignment");

    AlignedPanel panel;
    panel.calendar = cal;
    panel.stamps.assign(grid.begin() + first, grid.end());
    const std::size_t n = panel.stamps.size();
    panel.target.assign(values[0].begin() + first, values[0].end());
    panel.exog_names.reserve(exogenous.size());
    for (const auto& s : exogenous) panel.exog_names.push_back(s.symbol);
    for (std::size_t j = 1; j < n_series; ++j)
        panel.exog.emplace_back(values[j].begin() + first, values[j].end());

    for (std::size_t j = 0; j < n_series; ++j)
        for (std::size_t i = 0; i < n; ++i)
            if (filled[j][i + first])
                panel.gap_fill_log.push_back(
                    {all[j]->symbol, panel.stamps[i], "forward_fill"});
    return panel;
}

}  // namespace rollcast
