// rollcast command-line driver: validate experiment configs, run walk-forward
// sweeps, and export plot-ready prediction traces.
//
// Exit codes: 0 success, 1 validation failure, 2 data/IO failure, 3 internal.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rollcast/backtest.hpp"
#include "rollcast/config.hpp"
#include "rollcast/report_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

int run_validate(const std::string& config_path) {
    std::vector<std::string> diags;
    rollcast::load_config(config_path, diags);
    for (const std::string& d : diags) std::cout << d << '\n';
    if (diags.empty()) {
        std::cout << "ok: " << config_path << " is valid\n";
        return kExitOk;
    }
    std::cout << diags.size() << " problem(s) found\n";
    return kExitValidation;
}

std::string cell_basename(std::size_t index, const rollcast::BacktestReport& r) {
    return "cell_" + std::to_string(index) + "_" + rollcast::to_string(r.spec.algorithm()) +
           "_t" + std::to_string(r.plan.train_days) + "_h" +
           std::to_string(r.plan.horizon_days) + "_s" + std::to_string(r.spec.seed);
}

int run_backtest(const std::string& config_path, int jobs, bool sequential_timing,
                 long long seed_override) {
    std::vector<std::string> diags;
    rollcast::RunConfig cfg = rollcast::load_config(config_path, diags);
    if (!diags.empty()) {
        for (const std::string& d : diags) std::cerr << d << '\n';
        return kExitValidation;
    }
    if (const char* env_out = std::getenv("ROLLCAST_OUTPUT_DIR"); env_out && *env_out)
        cfg.output_dir = env_out;
    if (seed_override >= 0)
        for (auto& spec : cfg.models) spec.seed = static_cast<std::uint64_t>(seed_override);

    rollcast::AlignedPanel panel;
    std::vector<std::string> load_diags;
    try {
        panel = rollcast::build_panel(cfg, &load_diags);
    } catch (const rollcast::Error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    }
    for (const std::string& d : load_diags) std::cerr << "warning: " << d << '\n';

    // Sequential-timing mode runs one cell at a time so per-roll wall-clock
    // durations are not inflated by concurrent training.
    const int effective_jobs = sequential_timing ? 1 : std::max(1, jobs);
    const auto reports =
        rollcast::sweep(cfg.plans, cfg.models, panel, cfg.calendar, effective_jobs);

    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) {
        std::cerr << "cannot create output directory '" << cfg.output_dir << "': "
                  << ec.message() << '\n';
        return kExitData;
    }

    int warnings = 0;
    try {
        for (std::size_t i = 0; i < reports.size(); ++i) {
            const auto& r = reports[i];
            const std::string base = (std::filesystem::path(cfg.output_dir) /
                                      cell_basename(i, r))
                                         .string();
            rollcast::write_report_json(r, base + ".json");
            rollcast::write_interval_csv(r, base + ".csv");
            if (!r.ok()) {
                ++warnings;
                std::cerr << "warning: cell " << cell_basename(i, r) << " failed: " << r.error
                          << '\n';
            } else if (r.excluded_rolls > 0) {
                ++warnings;
                std::cerr << "warning: cell " << cell_basename(i, r) << " excluded "
                          << r.excluded_rolls << " failed roll(s)\n";
            }
        }
        rollcast::write_summary_csv(
            reports, (std::filesystem::path(cfg.output_dir) / "summary.csv").string());
    } catch (const rollcast::Error& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitData;
    }

    std::cout << "wrote " << reports.size() << " report(s) to " << cfg.output_dir;
    if (warnings > 0) std::cout << " (" << warnings << " warning(s))";
    std::cout << '\n';
    return kExitOk;
}

int run_plotdata(const std::string& report_path, const std::string& out_path) {
    try {
        rollcast::write_plotdata_csv(report_path, out_path);
    } catch (const rollcast::MalformedReport& e) {
        std::cerr << "malformed report: " << e.what() << '\n';
        return kExitData;
    } catch (const rollcast::Error& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitData;
    }
    std::cout << "wrote " << out_path << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rollcast: walk-forward intraday price forecasting"};
    app.require_subcommand(1);

    std::string config_path;
    std::string report_path;
    std::string out_path;
    int jobs = 1;
    bool sequential_timing = false;
    long long seed_override = -1;

    auto* validate = app.add_subcommand("validate", "check a config file and report problems");
    validate->add_option("config", config_path, "config JSON path")->required();

    auto* backtest = app.add_subcommand("backtest", "run the configured sweep");
    backtest->add_option("config", config_path, "config JSON path")->required();
    backtest->add_option("--jobs", jobs, "parallel sweep cells")->check(CLI::PositiveNumber);
    backtest->add_flag("--sequential-timing", sequential_timing,
                       "run cells one at a time for accurate MTT");
    backtest->add_option("--seed-override", seed_override,
                         "replace every model seed with this value");

    auto* plotdata = app.add_subcommand("plotdata", "flatten a report into plot-ready CSV");
    plotdata->add_option("report", report_path, "report JSON path")->required();
    plotdata->add_option("output", out_path, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return run_validate(config_path);
        if (backtest->parsed())
            return run_backtest(config_path, jobs, sequential_timing, seed_override);
        if (plotdata->parsed()) return run_plotdata(report_path, out_path);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitInternal;
}
