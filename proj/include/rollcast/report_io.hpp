#pragma once

#include <algorithm>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rollcast/backtest.hpp"
#include "rollcast/errors.hpp"

namespace rollcast {

using nlohmann::json;

inline json params_to_json(const Hyperparameters& hp) {
    json j;
    if (const auto* g = std::get_if<GbrtParams>(&hp)) {
        j["n_estimators"] = g->n_estimators;
        j["learning_rate"] = g->learning_rate;
        j["max_depth"] = g->max_depth;
        j["lambda_l2"] = g->lambda_l2;
        j["min_child_weight"] = g->min_child_weight;
    } else if (const auto* f = std::get_if<ForestParams>(&hp)) {
        j["n_estimators"] = f->n_estimators;
        j["max_depth"] = f->max_depth;
        j["min_samples_leaf"] = f->min_samples_leaf;
        j["feature_fraction"] = f->feature_fraction;
    } else if (const auto* m = std::get_if<MlpParams>(&hp)) {
        j["hidden_layers"] = m->hidden_layers;
        j["epochs"] = m->epochs;
        j["batch_size"] = m->batch_size;
        j["step_size"] = m->step_size;
        j["init_scale"] = m->init_scale;
    } else if (const auto* s = std::get_if<SvrParams>(&hp)) {
        j["C"] = s->C;
        j["epsilon"] = s->epsilon;
        j["gamma"] = s->gamma;
        j["tolerance"] = s->tolerance;
        j["max_passes"] = s->max_passes;
    }
    return j;
}

/// Report document. All wall-clock values live under "timing" subobjects so
/// determinism comparisons can strip them mechanically.
inline json report_to_json(const BacktestReport& r) {
    json j;
    j["format_version"] = 1;
    j["algorithm"] = to_string(r.spec.algorithm());
    j["seed"] = r.spec.seed;
    j["hyperparameters"] = params_to_json(r.spec.hyperparameters);
    j["plan"] = {{"train_days", r.plan.train_days},
                 {"horizon_days", r.plan.horizon_days},
                 {"evaluation",
                  {{"start", to_string(r.plan.evaluation.start)},
                   {"end", to_string(r.plan.evaluation.end)}}}};
    j["calendar"] = {{"session_open", time_of_day_string(r.calendar.session_open())},
                     {"session_close", time_of_day_string(r.calendar.session_close())},
                     {"interval_minutes", r.calendar.interval_minutes()}};
    j["excluded_rolls"] = r.excluded_rolls;
    j["error"] = r.error;

    json rolls = json::array();
    for (const RollResult& roll : r.rolls) {
        json rj;
        rj["roll_index"] = roll.roll_index;
        rj["train_start"] = to_string(roll.train_window.start);
        rj["train_end"] = to_string(roll.train_window.end);
        rj["failed"] = roll.failed;
        rj["failure"] = roll.failure;
        json stamps = json::array();
        for (const IntervalStamp& s : roll.forecast_stamps)
            stamps.push_back(to_string(r.calendar, s));
        rj["stamps"] = std::move(stamps);
        rj["actuals"] = roll.actuals;
        rj["predictions"] = roll.predictions;
        rj["timing"] = {{"train_seconds", roll.train_duration}};
        rolls.push_back(std::move(rj));
    }
    j["rolls"] = std::move(rolls);

    if (r.ok()) {
        j["aggregate"] = {{"rmse", r.aggregate.rmse},
                          {"mape", r.aggregate.mape},
                          {"mape_percent", r.aggregate.mape * 100.0},
                          {"mpe", r.aggregate.mpe},
                          {"n", r.aggregate.n},
                          {"n_rolls", r.aggregate.n_rolls},
                          {"timing", {{"mtt", r.aggregate.mtt}}}};
    } else {
        j["aggregate"] = nullptr;
    }
    return j;
}

/// Removes every "timing" subtree, recursively. Comparing two reports after
/// this yields the determinism contract: byte-identical modulo wall-clock.
inline json strip_timing(json j) {
    if (j.is_object()) {
        j.erase("timing");
        for (auto& [key, value] : j.items()) value = strip_timing(value);
    } else if (j.is_array()) {
        for (auto& value : j) value = strip_timing(value);
    }
    return j;
}

inline void write_report_json(const BacktestReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << report_to_json(r).dump(2) << '\n';
}

/// Flat per-interval trace for plotting: stamp, actual, prediction, roll.
inline void write_interval_csv(const BacktestReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "stamp,actual,prediction,roll_index\n";
    char buf[32];
    for (const RollResult& roll : r.rolls) {
        if (roll.failed) continue;
        for (std::size_t i = 0; i < roll.forecast_stamps.size(); ++i) {
            out << to_string(r.calendar, roll.forecast_stamps[i]);
            std::snprintf(buf, sizeof(buf), "%.17g", roll.actuals[i]);
            out << ',' << buf;
            std::snprintf(buf, sizeof(buf), "%.17g", roll.predictions[i]);
            out << ',' << buf << ',' << roll.roll_index << '\n';
        }
    }
}

/// Result-table summary, one row per sweep cell.
inline void write_summary_csv(std::span<const BacktestReport> reports, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "algorithm,train_days,horizon,rmse,mape,mpe,mtt\n";
    char buf[32];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << ',' << buf;
    };
    for (const BacktestReport& r : reports) {
        out << to_string(r.spec.algorithm()) << ',' << r.plan.train_days << ','
            << r.plan.horizon_days;
        if (r.ok()) {
            num(r.aggregate.rmse);
            num(r.aggregate.mape);
            num(r.aggregate.mpe);
            num(r.aggregate.mtt);
            out << '\n';
        } else {
            out << ",,,,\n";
        }
    }
}

/// Reads a report JSON and emits the plot-ready CSV: one row per interval,
/// ordered by stamp, with the absolute error recomputed.
inline void write_plotdata_csv(const std::string& report_path, const std::string& out_path) {
    std::ifstream in(report_path);
    if (!in) throw MalformedReport("cannot open report '" + report_path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw MalformedReport("report '" + report_path + "' is not valid JSON: " + e.what());
    }

    struct Row {
        std::string stamp;
        double actual;
        double prediction;
    };
    std::vector<Row> rows;
    if (!j.contains("rolls") || !j["rolls"].is_array())
        throw MalformedReport("report lacks a 'rolls' array");
    try {
        for (const json& roll : j["rolls"]) {
            if (roll.at("failed").get<bool>()) continue;
            const auto& stamps = roll.at("stamps");
            const auto& actuals = roll.at("actuals");
            const auto& predictions = roll.at("predictions");
            if (stamps.size() != actuals.size() || stamps.size() != predictions.size())
                throw MalformedReport("roll arrays disagree in length");
            for (std::size_t i = 0; i < stamps.size(); ++i)
                rows.push_back({stamps[i].get<std::string>(), actuals[i].get<double>(),
                                predictions[i].get<double>()});
        }
    } catch (const json::exception& e) {
        throw MalformedReport(std::string("report roll record is malformed: ") + e.what());
    }
    // ISO-8601 stamps sort lexicographically.
    std::sort(rows.begin(), rows.end(),
              [](const Row& a, const Row& b) { return a.stamp < b.stamp; });

    std::ofstream out(out_path);
    if (!out) throw Error("cannot open '" + out_path + "' for writing");
    out << "stamp,actual,prediction,absolute_error\n";
    char buf[32];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << ',' << buf;
    };
    for (const Row& r : rows) {
        out << r.stamp;
        num(r.actual);
        num(r.prediction);
        num(std::abs(r.actual - r.prediction));
        out << '\n';
    }
}

}  // namespace rollcast
