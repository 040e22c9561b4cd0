#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rollcast/backtest.hpp"
#include "rollcast/calendar.hpp"
#include "rollcast/errors.hpp"
#include "rollcast/model.hpp"
#include "rollcast/series.hpp"
#include "rollcast/synthetic.hpp"

namespace rollcast {

using nlohmann::json;

struct FileSource {
    std::string name;
    std::string path;
};

struct DataConfig {
    std::optional<SyntheticSpec> synthetic;
    std::optional<FileSource> target;
    std::vector<FileSource> exogenous;
    DateRange span;
};

/// Fully validated experiment definition. Unknown keys anywhere in the file
/// are rejected with a nearest-key suggestion.
struct RunConfig {
    TradingCalendar calendar;
    DataConfig data;
    std::vector<RollingPlan> plans;
    std::vector<ModelSpec> models;
    std::string output_dir = "out";
    std::optional<std::vector<int>> allowed_train_days;
};

namespace detail {

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline std::string nearest_key(const std::string& key, std::span<const char* const> known) {
    std::string best;
    std::size_t best_dist = key.size();  // only suggest when plausibly a typo
    for (const char* candidate : known) {
        const std::size_t d = edit_distance(key, candidate);
        if (d < best_dist || (d == best_dist && best.empty())) {
            best_dist = d;
            best = candidate;
        }
    }
    if (!best.empty() && best_dist <= std::max<std::size_t>(2, key.size() / 2)) return best;
    return {};
}

/// Diagnostic sink plus the strict-schema helpers shared by every section.
struct ConfigContext {
    std::vector<std::string>& diags;
    std::filesystem::path base_dir;

    void error(const std::string& path, const std::string& msg) {
        diags.push_back(path + ": " + msg);
    }

    void check_keys(const json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
        if (!j.is_object()) {
            error(path, "expected an object");
            return;
        }
        for (const auto& [key, value] : j.items()) {
            if (std::find_if(allowed.begin(), allowed.end(),
                             [&](const char* k) { return key == k; }) != allowed.end())
                continue;
            std::string msg = "unknown key";
            const std::string suggestion = nearest_key(key, {allowed.begin(), allowed.size()});
            if (!suggestion.empty()) msg += "; did you mean '" + suggestion + "'?";
            error(path + "." + key, msg);
        }
    }

    template <class T>
    std::optional<T> get(const json& j, const std::string& path, const char* key) {
        if (!j.is_object() || !j.contains(key)) return std::nullopt;
        try {
            return j.at(key).get<T>();
        } catch (const json::exception&) {
            error(path + "." + key, "wrong type");
            return std::nullopt;
        }
    }

    std::string resolve(const std::string& p) const {
        std::filesystem::path fp(p);
        if (fp.is_absolute() || base_dir.empty()) return p;
        return (base_dir / fp).string();
    }
};

inline std::optional<Date> get_date(ConfigContext& ctx, const json& j, const std::string& path,
                                    const char* key, bool required) {
    auto s = ctx.get<std::string>(j, path, key);
    if (!s) {
        if (required && (!j.is_object() || !j.contains(key)))
            ctx.error(path + "." + key, "missing required date");
        return std::nullopt;
    }
    auto d = try_parse_date(*s);
    if (!d) ctx.error(path + "." + key, "invalid date '" + *s + "', expected YYYY-MM-DD");
    return d;
}

inline std::optional<DateRange> get_range(ConfigContext& ctx, const json& j,
                                          const std::string& path, const char* key,
                                          bool required) {
    if (!j.is_object() || !j.contains(key)) {
        if (required) ctx.error(path + "." + key, "missing required section");
        return std::nullopt;
    }
    const json& r = j.at(key);
    const std::string rp = path + "." + key;
    ctx.check_keys(r, rp, {"start", "end"});
    auto start = get_date(ctx, r, rp, "start", true);
    auto end = get_date(ctx, r, rp, "end", true);
    if (!start || !end) return std::nullopt;
    if (*end < *start) {
        ctx.error(rp, "end precedes start");
        return std::nullopt;
    }
    return DateRange{*start, *end};
}

inline TradingCalendar parse_calendar(ConfigContext& ctx, const json& root) {
    std::chrono::minutes open{9 * 60 + 30}, close{16 * 60};
    std::set<Date> holidays;
    int interval = 15;
    if (root.contains("calendar")) {
        const json& c = root.at("calendar");
        const std::string path = "calendar";
        ctx.check_keys(c, path,
                       {"session_open", "session_close", "interval_minutes", "holidays",
                        "holidays_file"});
        if (auto s = ctx.get<std::string>(c, path, "session_open")) {
            try {
                open = parse_time_of_day(*s);
            } catch (const ParseError& e) {
                ctx.error(path + ".session_open", e.what());
            }
        }
        if (auto s = ctx.get<std::string>(c, path, "session_close")) {
            try {
                close = parse_time_of_day(*s);
            } catch (const ParseError& e) {
                ctx.error(path + ".session_close", e.what());
            }
        }
        if (auto v = ctx.get<int>(c, path, "interval_minutes")) interval = *v;
        if (c.contains("holidays")) {
            if (!c.at("holidays").is_array()) {
                ctx.error(path + ".holidays", "expected an array of dates");
            } else {
                std::size_t i = 0;
                for (const json& h : c.at("holidays")) {
                    const std::string hp = path + ".holidays[" + std::to_string(i++) + "]";
                    if (!h.is_string()) {
                        ctx.error(hp, "expected a date string");
                        continue;
                    }
                    auto d = try_parse_date(h.get<std::string>());
                    if (!d)
                        ctx.error(hp, "invalid date '" + h.get<std::string>() + "'");
                    else
                        holidays.insert(*d);
                }
            }
        }
        if (auto f = ctx.get<std::string>(c, path, "holidays_file")) {
            try {
                auto from_file = load_holiday_file(ctx.resolve(*f));
                holidays.insert(from_file.begin(), from_file.end());
            } catch (const ParseError& e) {
                ctx.error(path + ".holidays_file", e.what());
            }
        }
    }
    try {
        return TradingCalendar(open, close, holidays, interval);
    } catch (const ParseError& e) {
        ctx.error("calendar", e.what());
        return TradingCalendar();
    }
}

inline void parse_synthetic(ConfigContext& ctx, const json& s, DataConfig& data) {
    const std::string path = "data.synthetic";
    ctx.check_keys(s, path,
                   {"seed", "coefficients", "hour_amplitude", "dow_amplitude", "noise_sigma",
                    "base_price"});
    SyntheticSpec spec;
    if (auto v = ctx.get<std::uint64_t>(s, path, "seed")) spec.seed = *v;
    if (auto v = ctx.get<std::vector<double>>(s, path, "coefficients")) spec.coefficients = *v;
    if (auto v = ctx.get<double>(s, path, "hour_amplitude")) spec.hour_amplitude = *v;
    if (auto v = ctx.get<double>(s, path, "dow_amplitude")) spec.dow_amplitude = *v;
    if (auto v = ctx.get<double>(s, path, "noise_sigma")) spec.noise_sigma = *v;
    if (auto v = ctx.get<double>(s, path, "base_price")) spec.base_price = *v;
    try {
        spec.validate();
    } catch (const Error& e) {
        ctx.error(path, e.what());
    }
    data.synthetic = spec;
}

inline void parse_files(ConfigContext& ctx, const json& f, DataConfig& data) {
    const std::string path = "data.files";
    ctx.check_keys(f, path, {"target", "exogenous"});
    if (f.contains("target")) {
        const json& t = f.at("target");
        ctx.check_keys(t, path + ".target", {"symbol", "path"});
        FileSource src;
        if (auto v = ctx.get<std::string>(t, path + ".target", "symbol")) src.name = *v;
        if (auto v = ctx.get<std::string>(t, path + ".target", "path"))
            src.path = ctx.resolve(*v);
        if (src.name.empty() || src.path.empty())
            ctx.error(path + ".target", "needs non-empty 'symbol' and 'path'");
        data.target = src;
    } else {
        ctx.error(path + ".target", "missing required section");
    }
    if (!f.contains("exogenous") || !f.at("exogenous").is_array()) {
        ctx.error(path + ".exogenous", "expected an array of 8 sources");
        return;
    }
    std::size_t i = 0;
    for (const json& e : f.at("exogenous")) {
        const std::string ep = path + ".exogenous[" + std::to_string(i++) + "]";
        ctx.check_keys(e, ep, {"name", "path"});
        FileSource src;
        if (auto v = ctx.get<std::string>(e, ep, "name")) src.name = *v;
        if (auto v = ctx.get<std::string>(e, ep, "path")) src.path = ctx.resolve(*v);
        if (src.name.empty() || src.path.empty())
            ctx.error(ep, "needs non-empty 'name' and 'path'");
        data.exogenous.push_back(src);
    }
    if (data.exogenous.size() != 8)
        ctx.error(path + ".exogenous",
                  "expected exactly 8 exogenous series, got " +
                      std::to_string(data.exogenous.size()));
}

inline Hyperparameters parse_params(ConfigContext& ctx, Algorithm algo, const json& p,
                                    const std::string& path) {
    switch (algo) {
        case Algorithm::Gbrt: {
            GbrtParams g;
            ctx.check_keys(p, path,
                           {"n_estimators", "learning_rate", "max_depth", "lambda_l2",
                            "min_child_weight"});
            if (auto v = ctx.get<int>(p, path, "n_estimators")) g.n_estimators = *v;
            if (auto v = ctx.get<double>(p, path, "learning_rate")) g.learning_rate = *v;
            if (auto v = ctx.get<int>(p, path, "max_depth")) g.max_depth = *v;
            if (auto v = ctx.get<double>(p, path, "lambda_l2")) g.lambda_l2 = *v;
            if (auto v = ctx.get<double>(p, path, "min_child_weight")) g.min_child_weight = *v;
            return g;
        }
        case Algorithm::RandomForest: {
            ForestParams f;
            ctx.check_keys(p, path,
                           {"n_estimators", "max_depth", "min_samples_leaf", "feature_fraction"});
            if (auto v = ctx.get<int>(p, path, "n_estimators")) f.n_estimators = *v;
            if (auto v = ctx.get<int>(p, path, "max_depth")) f.max_depth = *v;
            if (auto v = ctx.get<int>(p, path, "min_samples_leaf")) f.min_samples_leaf = *v;
            if (auto v = ctx.get<double>(p, path, "feature_fraction")) f.feature_fraction = *v;
            return f;
        }
        case Algorithm::Mlp: {
            MlpParams m;
            ctx.check_keys(p, path,
                           {"hidden_layers", "epochs", "batch_size", "step_size", "init_scale"});
            if (auto v = ctx.get<std::vector<int>>(p, path, "hidden_layers"))
                m.hidden_layers = *v;
            if (auto v = ctx.get<int>(p, path, "epochs")) m.epochs = *v;
            if (auto v = ctx.get<int>(p, path, "batch_size")) m.batch_size = *v;
            if (auto v = ctx.get<double>(p, path, "step_size")) m.step_size = *v;
            if (auto v = ctx.get<double>(p, path, "init_scale")) m.init_scale = *v;
            return m;
        }
        case Algorithm::Svr: {
            SvrParams s;
            ctx.check_keys(p, path, {"C", "epsilon", "gamma", "tolerance", "max_passes"});
            if (auto v = ctx.get<double>(p, path, "C")) s.C = *v;
            if (auto v = ctx.get<double>(p, path, "epsilon")) s.epsilon = *v;
            if (auto v = ctx.get<double>(p, path, "gamma")) s.gamma = *v;
            if (auto v = ctx.get<double>(p, path, "tolerance")) s.tolerance = *v;
            if (auto v = ctx.get<std::int64_t>(p, path, "max_passes")) s.max_passes = *v;
            return s;
        }
    }
    return GbrtParams{};
}

}  // namespace detail

/// Parses and validates a config document. Content problems land in `diags`
/// as "key.path: message" lines; the returned config is complete only when
/// `diags` stays empty.
inline RunConfig parse_config(const json& root, std::vector<std::string>& diags,
                              const std::filesystem::path& base_dir = {}) {
    detail::ConfigContext ctx{diags, base_dir};
    RunConfig cfg;

    ctx.check_keys(root, "config",
                   {"calendar", "data", "plans", "models", "output_dir", "constraints"});
    cfg.calendar = detail::parse_calendar(ctx, root);

    if (!root.contains("data")) {
        ctx.error("data", "missing required section");
    } else {
        const json& d = root.at("data");
        ctx.check_keys(d, "data", {"synthetic", "files", "span"});
        const bool has_synth = d.contains("synthetic");
        const bool has_files = d.contains("files");
        if (has_synth == has_files)
            ctx.error("data", "exactly one of 'synthetic' or 'files' is required");
        if (has_synth) detail::parse_synthetic(ctx, d.at("synthetic"), cfg.data);
        if (has_files) detail::parse_files(ctx, d.at("files"), cfg.data);
        if (auto span = detail::get_range(ctx, d, "data", "span", true)) cfg.data.span = *span;
    }

    if (auto out = ctx.get<std::string>(root, "config", "output_dir")) cfg.output_dir = *out;
    if (cfg.output_dir.empty()) ctx.error("output_dir", "must not be empty");

    if (root.contains("constraints")) {
        const json& c = root.at("constraints");
        ctx.check_keys(c, "constraints", {"allowed_train_days"});
        if (auto v = ctx.get<std::vector<int>>(c, "constraints", "allowed_train_days"))
            cfg.allowed_train_days = *v;
    }

    if (!root.contains("plans") || !root.at("plans").is_array() || root.at("plans").empty()) {
        ctx.error("plans", "expected a non-empty array");
    } else {
        std::size_t i = 0;
        for (const json& p : root.at("plans")) {
            const std::string pp = "plans[" + std::to_string(i++) + "]";
            ctx.check_keys(p, pp, {"train_days", "horizon_days", "evaluation"});
            RollingPlan plan;
            if (auto v = ctx.get<int>(p, pp, "train_days"))
                plan.train_days = *v;
            else if (!p.contains("train_days"))
                ctx.error(pp + ".train_days", "missing required value");
            if (auto v = ctx.get<int>(p, pp, "horizon_days"))
                plan.horizon_days = *v;
            else if (!p.contains("horizon_days"))
                ctx.error(pp + ".horizon_days", "missing required value");
            if (auto ev = detail::get_range(ctx, p, pp, "evaluation", true))
                plan.evaluation = *ev;
            if (plan.train_days < 1) ctx.error(pp + ".train_days", "must be >= 1");
            if (plan.horizon_days < 1) ctx.error(pp + ".horizon_days", "must be >= 1");
            if (cfg.allowed_train_days &&
                std::find(cfg.allowed_train_days->begin(), cfg.allowed_train_days->end(),
                          plan.train_days) == cfg.allowed_train_days->end())
                ctx.error(pp + ".train_days",
                          "not in constraints.allowed_train_days");
            cfg.plans.push_back(plan);
        }
    }

    if (!root.contains("models") || !root.at("models").is_array() || root.at("models").empty()) {
        ctx.error("models", "expected a non-empty array");
    } else {
        std::size_t i = 0;
        for (const json& mj : root.at("models")) {
            const std::string mp = "models[" + std::to_string(i++) + "]";
            ctx.check_keys(mj, mp, {"algorithm", "seed", "params"});
            ModelSpec spec;
            Algorithm algo = Algorithm::Gbrt;
            bool algo_ok = false;
            if (auto a = ctx.get<std::string>(mj, mp, "algorithm")) {
                try {
                    algo = parse_algorithm(*a);
                    algo_ok = true;
                } catch (const ParseError& e) {
                    ctx.error(mp + ".algorithm", e.what());
                }
            } else {
                ctx.error(mp + ".algorithm", "missing required value");
            }
            if (auto s = ctx.get<std::uint64_t>(mj, mp, "seed"))
                spec.seed = *s;
            else
                ctx.error(mp + ".seed", "missing required seed");
            if (algo_ok) {
                const json params = mj.contains("params") ? mj.at("params") : json::object();
                spec.hyperparameters = detail::parse_params(ctx, algo, params, mp + ".params");
                try {
                    spec.validate();
                } catch (const InvalidHyperparameters& e) {
                    ctx.error(mp + ".params", e.what());
                }
            }
            cfg.models.push_back(spec);
        }
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path, std::vector<std::string>& diags) {
    std::ifstream in(path);
    if (!in) {
        diags.push_back(path + ": cannot open config file");
        return {};
    }
    json root;
    try {
        root = json::parse(in);
    } catch (const json::exception& e) {
        diags.push_back(path + ": invalid JSON: " + e.what());
        return {};
    }
    return parse_config(root, diags, std::filesystem::path(path).parent_path());
}

/// Materializes the configured panel: synthetic generation or file loading
/// plus alignment. Loader diagnostics (skipped rows) land in `load_diags`.
inline AlignedPanel build_panel(const RunConfig& cfg,
                                std::vector<std::string>* load_diags = nullptr) {
    if (cfg.data.synthetic)
        return generate_synthetic(*cfg.data.synthetic, cfg.calendar, cfg.data.span.start,
                                  cfg.data.span.end);
    if (!cfg.data.target) throw Error("config has no data source");
    BarSeries target =
        load_bars(cfg.data.target->path, cfg.data.target->name, cfg.calendar, load_diags);
    std::vector<BarSeries> exog;
    exog.reserve(cfg.data.exogenous.size());
    for (const FileSource& src : cfg.data.exogenous)
        exog.push_back(load_bars(src.path, src.name, cfg.calendar, load_diags));
    return align(target, exog, cfg.calendar, cfg.data.span.start, cfg.data.span.end);
}

}  // namespace rollcast
