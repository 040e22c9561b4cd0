#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "rollcast/calendar.hpp"
#include "rollcast/errors.hpp"
#include "rollcast/features.hpp"
#include "rollcast/metrics.hpp"
#include "rollcast/model.hpp"
#include "rollcast/serialize.hpp"
#include "rollcast/series.hpp"

namespace rollcast {

struct DateRange {
    Date start{};
    Date end{};  // inclusive

    bool operator==(const DateRange&) const = default;
};

/// Walk-forward protocol: train_days trading days of history per window,
/// horizon_days forecast per roll, rolling forward by exactly the horizon so
/// each evaluation interval is predicted once.
struct RollingPlan {
    int train_days = 60;
    int horizon_days = 1;
    DateRange evaluation;

    int roll_step_days() const { return horizon_days; }

    void validate() const {
        if (train_days < 1) throw Error("plan: train_days must be >= 1");
        if (horizon_days < 1) throw Error("plan: horizon_days must be >= 1");
        if (evaluation.end < evaluation.start)
            throw Error("plan: evaluation end precedes start");
    }

    bool operator==(const RollingPlan&) const = default;
};

struct RollWindows {
    DateRange train;
    DateRange forecast;

    bool operator==(const RollWindows&) const = default;
};

struct RollResult {
    int roll_index = 0;
    DateRange train_window;
    std::vector<IntervalStamp> forecast_stamps;
    std::vector<double> predictions;
    std::vector<double> actuals;
    double train_duration = 0.0;
    bool failed = false;
    std::string failure;
    // Leakage-audit captures, populated only on request; never serialized.
    std::optional<ScalerParams> scaler;
    std::uint64_t model_digest = 0;
};

struct BacktestReport {
    RollingPlan plan;
    ModelSpec spec;
    TradingCalendar calendar;
    std::vector<RollResult> rolls;
    MetricSet aggregate;
    int excluded_rolls = 0;
    std::string error;  // nonempty when the whole cell failed

    bool ok() const { return error.empty(); }

    /// Recomputes the aggregate from the concatenated roll records and
    /// compares; the stored aggregate is checked, never trusted.
    bool verify_aggregate() const {
        std::vector<double> a, p, d;
        for (const RollResult& r : rolls) {
            if (r.failed) continue;
            a.insert(a.end(), r.actuals.begin(), r.actuals.end());
            p.insert(p.end(), r.predictions.begin(), r.predictions.end());
            d.push_back(r.train_duration);
        }
        if (a.empty()) return rolls.empty() || !error.empty() || aggregate.n == 0;
        const MetricSet m = metric_set(a, p, d);
        return m.rmse == aggregate.rmse && m.mape == aggregate.mape && m.mpe == aggregate.mpe &&
               m.mtt == aggregate.mtt && m.n == aggregate.n && m.n_rolls == aggregate.n_rolls;
    }
};

/// Tiles the evaluation span into consecutive horizon-sized forecast blocks
/// (the final block may be shorter) and pairs each with the train_days
/// trading days immediately preceding it. The panel must carry
/// train_days + horizon_days trading days of history before the first
/// forecast day: the extra horizon supplies the lagged features of the
/// earliest training rows.
inline std::vector<RollWindows> enumerate_rolls(const RollingPlan& plan,
                                                const TradingCalendar& cal,
                                                const DateRange& panel_span) {
    plan.validate();
    const std::vector<Date> days = trading_days(cal, panel_span.start, panel_span.end);
    const std::vector<Date> eval_days =
        trading_days(cal, plan.evaluation.start, plan.evaluation.end);
    if (eval_days.empty()) throw InsufficientHistory("evaluation span has no trading days");

    auto day_index = [&](Date d) {
        auto it = std::lower_bound(days.begin(), days.end(), d);
        if (it == days.end() || *it != d)
            throw InsufficientHistory("evaluation day " + to_string(d) +
                                      " is outside the panel span");
        return static_cast<std::size_t>(it - days.begin());
    };

    const std::size_t history = static_cast<std::size_t>(plan.train_days + plan.horizon_days);
    std::vector<RollWindows> rolls;
    const std::size_t step = static_cast<std::size_t>(plan.horizon_days);
    for (std::size_t k = 0; k < eval_days.size(); k += step) {
        const std::size_t block_end = std::min(k + step, eval_days.size());
        const std::size_t b = day_index(eval_days[k]);
        day_index(eval_days[block_end - 1]);  // whole block must be on the panel
        if (b < history)
            throw InsufficientHistory(
                "need " + std::to_string(history) + " trading days of history before " +
                to_string(eval_days[k]) + ", have " + std::to_string(b));
        RollWindows w;
        w.train = {days[b - static_cast<std::size_t>(plan.train_days)], days[b - 1]};
        w.forecast = {eval_days[k], eval_days[block_end - 1]};
        rolls.push_back(w);
    }
    return rolls;
}

struct RunOptions {
    TrainOptions train;
    bool capture_artifacts = false;  // per-roll scaler + model digest, for audits
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::size_t stamp_index(const AlignedPanel& panel, const IntervalStamp& s) {
    auto it = std::lower_bound(panel.stamps.begin(), panel.stamps.end(), s);
    if (it == panel.stamps.end() || !(*it == s))
        throw InsufficientHistory("stamp " + to_string(s.date) + " not on the panel");
    return static_cast<std::size_t>(it - panel.stamps.begin());
}

}  // namespace detail

/// Runs one walk-forward cell: per roll, rebuild features with the lag gap
/// equal to the horizon in intervals, refit the scaler on that roll's
/// training rows only, train per spec and forecast the block. Diverged rolls
/// are recorded as failed and excluded from the aggregate, never dropped
/// silently.
inline BacktestReport run_backtest(const RollingPlan& plan, const ModelSpec& spec,
                                   const AlignedPanel& panel, const TradingCalendar& cal,
                                   const RunOptions& options = {}) {
    BacktestReport report;
    report.plan = plan;
    report.spec = spec;
    report.calendar = cal;

    if (panel.size() == 0) {
        report.error = "empty panel";
        return report;
    }
    const DateRange panel_span{panel.stamps.front().date, panel.stamps.back().date};
    const auto windows = enumerate_rolls(plan, cal, panel_span);
    const int slots = cal.slots_per_day();
    const int gap = plan.horizon_days * slots;

    for (std::size_t k = 0; k < windows.size(); ++k) {
        const RollWindows& w = windows[k];
        RollResult roll;
        roll.roll_index = static_cast<int>(k);
        roll.train_window = w.train;

        // Slice from horizon_days before the train window (lag feed) through
        // the end of the forecast block.
        Date lag_feed_start = w.train.start;
        for (int d = 0; d < plan.horizon_days; ++d)
            lag_feed_start = cal.prev_trading_day(lag_feed_start);
        const std::size_t first = detail::stamp_index(panel, {lag_feed_start, 0});
        const std::size_t last =
            detail::stamp_index(panel, {w.forecast.end, slots - 1});
        AlignedPanel slice = panel.slice(first, last - first + 1);

        const std::size_t n_train =
            static_cast<std::size_t>(plan.train_days) * static_cast<std::size_t>(slots);
        FeatureMatrix m = build_matrix(slice, cal, gap, FitOnRowRange{0, n_train});
        const std::size_t n_forecast = m.rows() - n_train;

        roll.forecast_stamps.assign(m.stamps.begin() + static_cast<std::ptrdiff_t>(n_train),
                                    m.stamps.end());
        roll.actuals.assign(m.targets.begin() + static_cast<std::ptrdiff_t>(n_train),
                            m.targets.end());
        try {
            RowMatrix train_rows{m.data.data(), n_train, m.cols()};
            std::span<const double> train_y{m.targets.data(), n_train};
            TrainedModel model = train(spec, train_rows, train_y, options.train);
            RowMatrix forecast_rows{m.data.data() + n_train * m.cols(), n_forecast, m.cols()};
            roll.predictions = model.predict(forecast_rows);
            roll.train_duration = model.train_duration;
            if (options.capture_artifacts) {
                roll.scaler = m.scaler;
                TrainedModel for_digest = model;
                for_digest.train_duration = 0.0;  // digest fitted state, not wall-clock
                std::ostringstream bytes;
                save_model(for_digest, bytes);
                roll.model_digest = detail::fnv1a(bytes.str());
            }
        } catch (const Error& e) {
            roll.failed = true;
            roll.failure = e.what();
            roll.predictions.clear();
            ++report.excluded_rolls;
        }
        report.rolls.push_back(std::move(roll));
    }

    std::vector<double> actuals, predictions, durations;
    for (const RollResult& r : report.rolls) {
        if (r.failed) continue;
        actuals.insert(actuals.end(), r.actuals.begin(), r.actuals.end());
        predictions.insert(predictions.end(), r.predictions.begin(), r.predictions.end());
        durations.push_back(r.train_duration);
    }
    if (actuals.empty()) {
        report.error = "all " + std::to_string(report.rolls.size()) + " rolls failed";
        return report;
    }
    report.aggregate = metric_set(actuals, predictions, durations);
    return report;
}

/// Cartesian sweep over plans and specs. Cells run independently (optionally
/// in parallel); a failing cell records its error in that cell's report and
/// the sweep continues. Reports come back sorted by (algorithm, train_days,
/// horizon).
inline std::vector<BacktestReport> sweep(std::span<const RollingPlan> plans,
                                         std::span<const ModelSpec> specs,
                                         const AlignedPanel& panel, const TradingCalendar& cal,
                                         int jobs = 1, const RunOptions& options = {}) {
    struct Cell {
        std::size_t plan_idx;
        std::size_t spec_idx;
    };
    std::vector<Cell> cells;
    for (std::size_t p = 0; p < plans.size(); ++p)
        for (std::size_t s = 0; s < specs.size(); ++s) cells.push_back({p, s});

    std::vector<BacktestReport> reports(cells.size());
    auto run_cell = [&](std::size_t c) {
        const Cell& cell = cells[c];
        try {
            reports[c] = run_backtest(plans[cell.plan_idx], specs[cell.spec_idx], panel, cal,
                                      options);
        } catch (const Error& e) {
            reports[c].plan = plans[cell.plan_idx];
            reports[c].spec = specs[cell.spec_idx];
            reports[c].calendar = cal;
            reports[c].error = e.what();
        }
    };

    if (jobs <= 1 || cells.size() <= 1) {
        for (std::size_t c = 0; c < cells.size(); ++c) run_cell(c);
    } else {
        std::atomic<std::size_t> next{0};
        const int n_workers = std::min<int>(jobs, static_cast<int>(cells.size()));
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int wkr = 0; wkr < n_workers; ++wkr) {
            pool.emplace_back([&] {
                for (std::size_t c = next.fetch_add(1); c < cells.size();
                     c = next.fetch_add(1))
                    run_cell(c);
            });
        }
        for (auto& th : pool) th.join();
    }

    std::stable_sort(reports.begin(), reports.end(),
                     [](const BacktestReport& a, const BacktestReport& b) {
                         return std::make_tuple(static_cast<int>(a.spec.algorithm()),
                                                a.plan.train_days, a.plan.horizon_days) <
                                std::make_tuple(static_cast<int>(b.spec.algorithm()),
                                                b.plan.train_days, b.plan.horizon_days);
                     });
    return reports;
}

}  // namespace rollcast
