#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lblnav/filters.hpp"
#include "lblnav/obsv.hpp"
#include "lblnav/truthsim.hpp"

namespace lblnav {

/// Scalar knobs behind the filter noise matrices. The proposed filter gets
/// Qx = qx_intensity·I and Qy = diag(qy_range per distance output, qy_pair
/// per pair output); each baseline gets its own intensity/variance pair.
struct TuningConfig {
    double qx_intensity = 1e-5;
    double qy_range = 1.0;
    double qy_pair = 2.0;
    double ekf_q_intensity = 1e-5;
    double ekf_range_var = 1.0;
    double algebraic_q_intensity = 1e-5;
    double algebraic_pos_var = 4.0;
};

/// Full description of one simulation campaign. Defaults reproduce the
/// standard four-transponder survey scenario.
struct ScenarioConfig {
    double duration_s = 600.0;
    int imu_hz = 100;
    int range_hz = 1;
    std::uint64_t seed = 1;
    int monte_carlo_runs = 1;
    double min_range_m = 1.0;
    std::vector<std::string> filters{"proposed"};
    LandmarkSet landmarks = default_landmarks();
    NoiseConfig noise;
    TrajectoryParams trajectory;
    TuningConfig tuning;
};

/// One error record per acoustic epoch. Velocity and gravity errors are
/// body-frame, matching the estimated quantities.
struct EpochRecord {
    double t = 0.0;
    Vec3 ep = Vec3::Zero();
    Vec3 ev = Vec3::Zero();
    Vec3 eg = Vec3::Zero();
    Eigen::VectorXd er;          // per-transponder distance errors
    double res_r1 = 0.0;         // |distance state 1 − ‖s_1 − p̂‖|
    double res_s8 = 0.0;         // |s8 − p̂·(R·v̂)|
    double innovation_norm = 0.0;
};

struct RunSummary {
    double position_rmse = 0.0;  // steady-state window (final half of the run)
    double velocity_rmse = 0.0;
    double gravity_rmse = 0.0;
    double convergence_time_s = -1.0;  // first time the 0.5 m bound holds for good
    bool diverged = false;
};

struct RunReport {
    std::string filter;
    int run_index = 0;
    int n_landmarks = 0;
    std::vector<EpochRecord> records;
    RunSummary summary;
};

/// @brief Parses and validates a configuration file.
/// Unknown keys, malformed JSON, and wrong value types raise ParseError with
/// field context; well-formed values that violate a constraint raise
/// ValidationError naming the field.
ScenarioConfig load_config(const std::string& path);

/// @brief Same contract as load_config, for an already-parsed document.
ScenarioConfig config_from_json(const nlohmann::json& j);

/// @brief Deterministic per-run generator: one independent stream per
/// (seed, run index) pair.
std::mt19937_64 scenario_rng(std::uint64_t seed, std::uint32_t run_index);

/// @brief Runs the configured Monte Carlo campaign. Every filter within one
/// run consumes the identical measurement sequence, so cross-filter
/// comparisons are paired. A filter that diverges yields a flagged report
/// with the records collected so far.
std::vector<RunReport> run_scenario(const ScenarioConfig& config);

/// @brief Writes one CSV per report plus summary.json into out_dir. Files
/// are written to a temporary name and renamed, so readers never observe a
/// partial file. Throws IoError on filesystem failures.
void emit_outputs(const std::vector<RunReport>& reports, const std::string& out_dir);

/// @brief JSON form of a Gramian certificate (used by the gramian
/// subcommand and by tooling that consumes gramian.json).
nlohmann::json gramian_to_json(const GramianReport& report);

/// @brief Steady-state RMSE pooled across runs of one filter, recomputed
/// the same way emit_outputs derives summary.json.
RunSummary pooled_summary(const std::vector<RunReport>& reports,
                          const std::string& filter);

} // namespace lblnav
