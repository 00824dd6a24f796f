#include <algorithm>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lblnav/errors.hpp"
#include "lblnav/scenario.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string filters_csv;
};

void add_common_options(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "Path to a JSON configuration file");
    cmd->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--seed", opts.seed, "Override the configured seed")
        ->each([&opts](const std::string&) { opts.seed_given = true; });
    cmd->add_option("--filters", opts.filters_csv,
                    "Comma-separated filter list (proposed,ekf,algebraic)");
}

std::vector<std::string> split_csv(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

lblnav::ScenarioConfig resolve_config(const CommonOptions& opts) {
    lblnav::ScenarioConfig config;
    if (!opts.config_path.empty()) {
        config = lblnav::load_config(opts.config_path);
    }
    if (opts.seed_given) {
        config.seed = opts.seed;
        config.noise.seed = opts.seed;
    }
    if (!opts.filters_csv.empty()) {
        config.filters = split_csv(opts.filters_csv);
    }
    return config;
}

void print_summary_table(const std::vector<lblnav::RunReport>& reports) {
    std::vector<std::string> order;
    for (const auto& report : reports) {
        if (std::find(order.begin(), order.end(), report.filter) == order.end()) {
            order.push_back(report.filter);
        }
    }
    std::cout << std::left << std::setw(12) << "filter" << std::right
              << std::setw(16) << "pos RMSE [m]" << std::setw(18)
              << "vel RMSE [m/s]" << std::setw(19) << "grav RMSE [m/s2]"
              << std::setw(15) << "conv [s]" << std::setw(11) << "diverged"
              << "\n";
    for (const auto& name : order) {
        const lblnav::RunSummary pooled = lblnav::pooled_summary(reports, name);
        long diverged = 0;
        for (const auto& report : reports) {
            if (report.filter == name && report.summary.diverged) ++diverged;
        }
        std::cout << std::left << std::setw(12) << name << std::right
                  << std::setw(16) << std::setprecision(4) << pooled.position_rmse
                  << std::setw(18) << pooled.velocity_rmse << std::setw(19)
                  << pooled.gravity_rmse << std::setw(15)
                  << pooled.convergence_time_s << std::setw(11) << diverged
                  << "\n";
    }
}

int run_simulate(const CommonOptions& opts) {
    const lblnav::ScenarioConfig config = resolve_config(opts);
    const auto reports = lblnav::run_scenario(config);
    lblnav::emit_outputs(reports, opts.out_dir);
    print_summary_table(reports);
    std::cout << "wrote " << reports.size() << " CSV file(s) and summary.json to "
              << opts.out_dir << "\n";
    return 0;
}

int run_compare(const CommonOptions& opts) {
    CommonOptions forced = opts;
    if (forced.filters_csv.empty()) {
        forced.filters_csv = "proposed,ekf,algebraic";
    }
    return run_simulate(forced);
}

int run_gramian(const CommonOptions& opts, double t0, double tf) {
    const lblnav::ScenarioConfig config = resolve_config(opts);
    const lblnav::SignalRecord record = lblnav::record_true_signals(
        config.trajectory, config.landmarks, t0, tf, 1.0 / config.imu_hz,
        config.min_range_m);
    const lblnav::GramianReport report =
        lblnav::gramian(t0, tf, record, 1.0 / config.range_hz);
    const nlohmann::json j = lblnav::gramian_to_json(report);

    std::filesystem::create_directories(opts.out_dir);
    const auto path = std::filesystem::path(opts.out_dir) / "gramian.json";
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw lblnav::IoError("cannot open " + path.string() + " for writing");
        out << j.dump(2) << "\n";
    }
    std::cout << "min_eigenvalue " << report.min_eigenvalue << ", condition_number "
              << report.condition_number << " on [" << t0 << ", " << tf
              << "] s; wrote " << path.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sensor-based LBL navigation filter toolkit"};
    app.require_subcommand(1);

    CommonOptions sim_opts;
    CLI::App* simulate = app.add_subcommand(
        "simulate", "Run the configured Monte Carlo scenario and write error CSVs");
    add_common_options(simulate, sim_opts);

    CommonOptions cmp_opts;
    CLI::App* compare = app.add_subcommand(
        "compare", "Run all filters on the same measurements and print a comparison");
    add_common_options(compare, cmp_opts);

    CommonOptions gram_opts;
    double t0 = 0.0;
    double tf = 10.0;
    CLI::App* gramian = app.add_subcommand(
        "gramian", "Evaluate the observability Gramian certificate on an interval");
    add_common_options(gramian, gram_opts);
    gramian->add_option("--t0", t0, "Interval start [s]")->capture_default_str();
    gramian->add_option("--tf", tf, "Interval end [s]")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return run_simulate(sim_opts);
        if (compare->parsed()) return run_compare(cmp_opts);
        if (gramian->parsed()) return run_gramian(gram_opts, t0, tf);
    } catch (const lblnav::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
