#include "lblnav/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lblnav/errors.hpp"

namespace lblnav {

namespace {

using nlohmann::json;

constexpr double kConvergenceThreshold = 0.5;  // m

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

[[noreturn]] void parse_fail(const std::string& context, const std::string& what) {
    throw ParseError("config field '" + context + "': " + what);
}

[[noreturn]] void validate_fail(const std::string& field, const std::string& constraint) {
    throw ValidationError("config field '" + field + "' " + constraint);
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& context) {
    for (const auto& item : obj.items()) {
        if (!allowed.contains(item.key())) {
            throw ParseError("unknown config key '" + item.key() + "' in '" +
                             context + "'");
        }
    }
}

double get_number(const json& obj, const char* key, double fallback,
                  const std::string& context) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) parse_fail(context + "." + key, "expected a number");
    return v.get<double>();
}

int get_integer(const json& obj, const char* key, int fallback,
                const std::string& context) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) parse_fail(context + "." + key, "expected an integer");
    return v.get<int>();
}

Vec3 get_vec3(const json& v, const std::string& context) {
    if (!v.is_array() || v.size() != 3) {
        parse_fail(context, "expected an array of 3 numbers");
    }
    Vec3 out;
    for (int k = 0; k < 3; ++k) {
        if (!v[static_cast<std::size_t>(k)].is_number()) {
            parse_fail(context, "expected an array of 3 numbers");
        }
        out(k) = v[static_cast<std::size_t>(k)].get<double>();
    }
    if (!out.allFinite()) validate_fail(context, "must be finite");
    return out;
}

void parse_noise(const json& obj, NoiseConfig& noise) {
    reject_unknown_keys(obj,
                        {"sigma_range_m", "sigma_accel_mps2", "sigma_gyro_radps",
                         "sigma_roll_pitch_rad", "sigma_yaw_rad"},
                        "noise");
    noise.sigma_range = get_number(obj, "sigma_range_m", noise.sigma_range, "noise");
    noise.sigma_accel = get_number(obj, "sigma_accel_mps2", noise.sigma_accel, "noise");
    noise.sigma_gyro = get_number(obj, "sigma_gyro_radps", noise.sigma_gyro, "noise");
    noise.sigma_roll_pitch =
        get_number(obj, "sigma_roll_pitch_rad", noise.sigma_roll_pitch, "noise");
    noise.sigma_yaw = get_number(obj, "sigma_yaw_rad", noise.sigma_yaw, "noise");
}

void parse_tuning(const json& obj, TuningConfig& tuning) {
    reject_unknown_keys(obj,
                        {"qx_intensity", "qy_range", "qy_pair", "ekf_q_intensity",
                         "ekf_range_var", "algebraic_q_intensity", "algebraic_pos_var"},
                        "tuning");
    tuning.qx_intensity = get_number(obj, "qx_intensity", tuning.qx_intensity, "tuning");
    tuning.qy_range = get_number(obj, "qy_range", tuning.qy_range, "tuning");
    tuning.qy_pair = get_number(obj, "qy_pair", tuning.qy_pair, "tuning");
    tuning.ekf_q_intensity =
        get_number(obj, "ekf_q_intensity", tuning.ekf_q_intensity, "tuning");
    tuning.ekf_range_var =
        get_number(obj, "ekf_range_var", tuning.ekf_range_var, "tuning");
    tuning.algebraic_q_intensity =
        get_number(obj, "algebraic_q_intensity", tuning.algebraic_q_intensity, "tuning");
    tuning.algebraic_pos_var =
        get_number(obj, "algebraic_pos_var", tuning.algebraic_pos_var, "tuning");
}

void parse_trajectory(const json& obj, TrajectoryParams& params) {
    reject_unknown_keys(obj,
                        {"center", "radius_m", "period_s", "vertical_speed_mps",
                         "g0_mps2", "pitch_amplitude_rad", "pitch_period_s",
                         "roll_amplitude_rad", "roll_period_s"},
                        "trajectory");
    if (obj.contains("center")) params.center = get_vec3(obj.at("center"), "trajectory.center");
    params.radius_m = get_number(obj, "radius_m", params.radius_m, "trajectory");
    params.period_s = get_number(obj, "period_s", params.period_s, "trajectory");
    params.vertical_speed_mps =
        get_number(obj, "vertical_speed_mps", params.vertical_speed_mps, "trajectory");
    params.g0_mps2 = get_number(obj, "g0_mps2", params.g0_mps2, "trajectory");
    params.pitch_amplitude_rad =
        get_number(obj, "pitch_amplitude_rad", params.pitch_amplitude_rad, "trajectory");
    params.pitch_period_s =
        get_number(obj, "pitch_period_s", params.pitch_period_s, "trajectory");
    params.roll_amplitude_rad =
        get_number(obj, "roll_amplitude_rad", params.roll_amplitude_rad, "trajectory");
    params.roll_period_s =
        get_number(obj, "roll_period_s", params.roll_period_s, "trajectory");
}

void validate_config(const ScenarioConfig& config) {
    if (!(config.duration_s > 0.0)) validate_fail("duration_s", "must be positive");
    if (config.imu_hz <= 0) validate_fail("rates.imu_hz", "must be positive");
    if (config.range_hz <= 0) validate_fail("rates.range_hz", "must be positive");
    if (config.imu_hz % config.range_hz != 0) {
        validate_fail("rates.imu_hz", "must be an integer multiple of rates.range_hz");
    }
    const double epochs = config.duration_s * config.range_hz;
    if (std::abs(epochs - std::round(epochs)) > 1e-9) {
        validate_fail("duration_s", "must span a whole number of acoustic epochs");
    }
    if (config.monte_carlo_runs < 1) validate_fail("monte_carlo_runs", "must be at least 1");
    if (!(config.min_range_m > 0.0)) validate_fail("min_range_m", "must be positive");

    if (config.noise.sigma_range < 0.0) validate_fail("noise.sigma_range_m", "must be nonnegative");
    if (config.noise.sigma_accel < 0.0) validate_fail("noise.sigma_accel_mps2", "must be nonnegative");
    if (config.noise.sigma_gyro < 0.0) validate_fail("noise.sigma_gyro_radps", "must be nonnegative");
    if (config.noise.sigma_roll_pitch < 0.0) {
        validate_fail("noise.sigma_roll_pitch_rad", "must be nonnegative");
    }
    if (config.noise.sigma_yaw < 0.0) validate_fail("noise.sigma_yaw_rad", "must be nonnegative");

    if (config.landmarks.size() < 1) validate_fail("landmarks", "must list at least one transponder");
    if (config.filters.empty()) validate_fail("filters", "must select at least one filter");
    std::set<std::string> seen;
    for (const auto& name : config.filters) {
        if (name != "proposed" && name != "ekf" && name != "algebraic") {
            validate_fail("filters", "entries must be proposed, ekf, or algebraic (got '" + name + "')");
        }
        if (!seen.insert(name).second) {
            validate_fail("filters", "lists '" + name + "' twice");
        }
    }

    if (config.tuning.qx_intensity < 0.0) validate_fail("tuning.qx_intensity", "must be nonnegative");
    if (!(config.tuning.qy_range > 0.0)) validate_fail("tuning.qy_range", "must be positive");
    if (!(config.tuning.qy_pair > 0.0)) validate_fail("tuning.qy_pair", "must be positive");
    if (config.tuning.ekf_q_intensity < 0.0) {
        validate_fail("tuning.ekf_q_intensity", "must be nonnegative");
    }
    if (!(config.tuning.ekf_range_var > 0.0)) validate_fail("tuning.ekf_range_var", "must be positive");
    if (config.tuning.algebraic_q_intensity < 0.0) {
        validate_fail("tuning.algebraic_q_intensity", "must be nonnegative");
    }
    if (!(config.tuning.algebraic_pos_var > 0.0)) {
        validate_fail("tuning.algebraic_pos_var", "must be positive");
    }

    if (!(config.trajectory.radius_m >= 0.0)) validate_fail("trajectory.radius_m", "must be nonnegative");
    if (!(config.trajectory.period_s > 0.0)) validate_fail("trajectory.period_s", "must be positive");
    if (!(config.trajectory.pitch_period_s > 0.0)) {
        validate_fail("trajectory.pitch_period_s", "must be positive");
    }
    if (!(config.trajectory.roll_period_s > 0.0)) {
        validate_fail("trajectory.roll_period_s", "must be positive");
    }
    const double max_pitch = std::abs(config.trajectory.pitch_amplitude_rad);
    if (!(max_pitch < 1.5)) {
        validate_fail("trajectory.pitch_amplitude_rad", "must stay clear of gimbal lock");
    }
}

FilterTuning proposed_tuning(const ScenarioConfig& config) {
    const int n_l = config.landmarks.size();
    FilterTuning tuning;
    tuning.Qx = config.tuning.qx_intensity *
                Eigen::MatrixXd::Identity(state_dim(n_l), state_dim(n_l));
    Eigen::VectorXd qy(output_dim(n_l));
    qy.head(n_l).setConstant(config.tuning.qy_range);
    qy.tail(output_dim(n_l) - n_l).setConstant(config.tuning.qy_pair);
    tuning.Qy = qy.asDiagonal();
    return tuning;
}

RunSummary summarize(const std::vector<EpochRecord>& records, bool diverged) {
    RunSummary summary;
    summary.diverged = diverged;
    if (records.empty()) return summary;

    const double window_start = records.back().t / 2.0;
    double sp = 0.0, sv = 0.0, sg = 0.0;
    long count = 0;
    for (const auto& rec : records) {
        if (rec.t > window_start) {
            sp += rec.ep.squaredNorm();
            sv += rec.ev.squaredNorm();
            sg += rec.eg.squaredNorm();
            ++count;
        }
    }
    if (count > 0) {
        summary.position_rmse = std::sqrt(sp / static_cast<double>(count));
        summary.velocity_rmse = std::sqrt(sv / static_cast<double>(count));
        summary.gravity_rmse = std::sqrt(sg / static_cast<double>(count));
    }

    // Convergence time: start of the longest suffix on which the position
    // error never exceeds the threshold again.
    auto it = records.rbegin();
    while (it != records.rend() && it->ep.norm() <= kConvergenceThreshold) ++it;
    summary.convergence_time_s = (it == records.rbegin()) ? -1.0 : it.base()->t;
    return summary;
}

struct RunInputs {
    const ScenarioConfig* config = nullptr;
    const std::vector<TruthState>* truth = nullptr;
    const std::vector<SensorFrame>* frames = nullptr;
    std::vector<Eigen::VectorXd> true_range_table;  // per epoch
    int epoch_stride = 0;
    double dt = 0.0;
    double dt_range = 0.0;
};

EpochRecord make_record(const TruthState& truth, const NavEstimate& nav,
                        const Eigen::VectorXd& range_states_or_derived,
                        const Eigen::VectorXd& r_true, double res_r1, double res_s8,
                        double innovation_norm) {
    EpochRecord rec;
    rec.t = truth.t;
    rec.ep = nav.p_hat - truth.p;
    rec.ev = nav.v_hat - truth.v;
    rec.eg = nav.g_hat - truth.g;
    rec.er = range_states_or_derived - r_true;
    rec.res_r1 = res_r1;
    rec.res_s8 = res_s8;
    rec.innovation_norm = innovation_norm;
    return rec;
}

RunReport drive_proposed(const RunInputs& in, int run_index) {
    const ScenarioConfig& config = *in.config;
    const auto& frames = *in.frames;
    const auto& truth = *in.truth;
    const int n_l = config.landmarks.size();
    const RangeGuard guard{config.min_range_m};
    const FilterTuning tuning = proposed_tuning(config);

    RunReport report;
    report.filter = "proposed";
    report.run_index = run_index;
    report.n_landmarks = n_l;

    bool diverged = false;
    AugmentedState state = init_filter(frames[0], config.landmarks, tuning, guard);
    try {
        std::size_t epoch_index = 1;
        for (std::size_t k = 1; k < frames.size(); ++k) {
            // Midpoint-averaged inputs over the interval; holding the start
            // sample instead leaves a rectification bias of order ‖ω‖‖a‖dt/2,
            // which is larger than the accelerometer noise floor.
            const SensorFrame& lo = frames[k - 1];
            const SensorFrame& hi = frames[k];
            const Vec3 a_in = 0.5 * (lo.a_meas + hi.a_meas);
            const Vec3 w_in = 0.5 * (lo.w_meas + hi.w_meas);
            const Mat3 R_in = orthonormalize(0.5 * (lo.R_meas + hi.R_meas));
            state = predict(state, a_in, w_in, R_in, in.dt,
                            config.landmarks, tuning, guard);
            if (k % static_cast<std::size_t>(in.epoch_stride) != 0) continue;

            state = update(state, frames[k], config.landmarks, tuning, in.dt_range, guard);

            const NavEstimate nav = extract_nav(state);
            const Eigen::VectorXd& r_true = in.true_range_table[epoch_index];
            const double res_r1 =
                std::abs(state.chi(kIdxRange) -
                         (config.landmarks.s[0] - nav.p_hat).norm());
            const double res_s8 =
                std::abs(state.chi(idx_s8(n_l)) -
                         nav.p_hat.dot(frames[k].R_meas * nav.v_hat));
            report.records.push_back(make_record(
                truth[k], nav, state.chi.segment(kIdxRange, n_l), r_true, res_r1,
                res_s8, state.last_innovation.size() ? state.last_innovation.norm() : 0.0));
            ++epoch_index;
        }
    } catch (const DivergenceDetected&) {
        diverged = true;
    }
    report.summary = summarize(report.records, diverged);
    return report;
}

RunReport drive_chain(const RunInputs& in, int run_index, bool use_ekf) {
    const ScenarioConfig& config = *in.config;
    const auto& frames = *in.frames;
    const auto& truth = *in.truth;
    const int n_l = config.landmarks.size();
    const RangeGuard guard{config.min_range_m};
    const ChainTuning tuning =
        use_ekf ? ChainTuning{config.tuning.ekf_q_intensity, config.tuning.ekf_range_var}
                : ChainTuning{config.tuning.algebraic_q_intensity,
                              config.tuning.algebraic_pos_var};

    RunReport report;
    report.filter = use_ekf ? "ekf" : "algebraic";
    report.run_index = run_index;
    report.n_landmarks = n_l;

    bool diverged = false;
    ChainState state = chain_init(frames[0]);
    try {
        std::size_t epoch_index = 1;
        for (std::size_t k = 1; k < frames.size(); ++k) {
            // Same midpoint input treatment as the proposed filter, so the
            // comparison does not hinge on integration error.
            const Vec3 u_in = 0.5 * (frames[k - 1].R_meas * frames[k - 1].a_meas +
                                     frames[k].R_meas * frames[k].a_meas);
            chain_predict(state, u_in, in.dt, tuning.q_intensity);
            if (k % static_cast<std::size_t>(in.epoch_stride) != 0) continue;

            const Eigen::VectorXd r_meas = Eigen::Map<const Eigen::VectorXd>(
                frames[k].ranges.data(), static_cast<Eigen::Index>(frames[k].ranges.size()));
            if (use_ekf) {
                ekf_range_update(state, r_meas, config.landmarks, tuning.meas_var, guard);
            } else {
                position_update(state, trilaterate(r_meas, config.landmarks),
                                tuning.meas_var);
            }

            const NavEstimate nav = chain_nav(state, frames[k].R_meas);
            const Eigen::VectorXd& r_true = in.true_range_table[epoch_index];
            Eigen::VectorXd derived(n_l);
            for (int i = 0; i < n_l; ++i) {
                derived(i) = (config.landmarks.s[static_cast<std::size_t>(i)] -
                              nav.p_hat).norm();
            }
            report.records.push_back(
                make_record(truth[k], nav, derived, r_true, 0.0, 0.0, 0.0));
            ++epoch_index;
        }
    } catch (const DivergenceDetected&) {
        diverged = true;
    }
    report.summary = summarize(report.records, diverged);
    return report;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

} // namespace

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

ScenarioConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("config root must be a JSON object");
    reject_unknown_keys(j,
                        {"duration_s", "seed", "monte_carlo_runs", "min_range_m",
                         "filters", "rates", "landmarks", "noise", "tuning",
                         "trajectory"},
                        "(root)");

    ScenarioConfig config;
    config.duration_s = get_number(j, "duration_s", config.duration_s, "(root)");
    config.monte_carlo_runs =
        get_integer(j, "monte_carlo_runs", config.monte_carlo_runs, "(root)");
    config.min_range_m = get_number(j, "min_range_m", config.min_range_m, "(root)");

    if (j.contains("seed")) {
        const json& v = j.at("seed");
        if (!v.is_number_integer()) parse_fail("seed", "expected an integer");
        if (!v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
            validate_fail("seed", "must be nonnegative");
        }
        config.seed = v.get<std::uint64_t>();
    }

    if (j.contains("rates")) {
        const json& rates = j.at("rates");
        if (!rates.is_object()) parse_fail("rates", "expected an object");
        reject_unknown_keys(rates, {"imu_hz", "range_hz"}, "rates");
        config.imu_hz = get_integer(rates, "imu_hz", config.imu_hz, "rates");
        config.range_hz = get_integer(rates, "range_hz", config.range_hz, "rates");
    }

    if (j.contains("filters")) {
        const json& filters = j.at("filters");
        if (!filters.is_array()) parse_fail("filters", "expected an array of names");
        config.filters.clear();
        for (const auto& entry : filters) {
            if (!entry.is_string()) parse_fail("filters", "expected an array of names");
            config.filters.push_back(entry.get<std::string>());
        }
    }

    if (j.contains("landmarks")) {
        const json& landmarks = j.at("landmarks");
        if (!landmarks.is_array()) parse_fail("landmarks", "expected an array of [x,y,z] triples");
        config.landmarks.s.clear();
        for (std::size_t i = 0; i < landmarks.size(); ++i) {
            config.landmarks.s.push_back(
                get_vec3(landmarks[i], "landmarks[" + std::to_string(i) + "]"));
        }
    }

    if (j.contains("noise")) {
        const json& noise = j.at("noise");
        if (!noise.is_object()) parse_fail("noise", "expected an object");
        parse_noise(noise, config.noise);
    }
    if (j.contains("tuning")) {
        const json& tuning = j.at("tuning");
        if (!tuning.is_object()) parse_fail("tuning", "expected an object");
        parse_tuning(tuning, config.tuning);
    }
    if (j.contains("trajectory")) {
        const json& trajectory = j.at("trajectory");
        if (!trajectory.is_object()) parse_fail("trajectory", "expected an object");
        parse_trajectory(trajectory, config.trajectory);
    }

    config.noise.seed = config.seed;
    validate_config(config);
    return config;
}

std::mt19937_64 scenario_rng(std::uint64_t seed, std::uint32_t run_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32), run_index};
    return std::mt19937_64(seq);
}

std::vector<RunReport> run_scenario(const ScenarioConfig& config) {
    validate_config(config);

    const bool needs_geometry =
        std::any_of(config.filters.begin(), config.filters.end(),
                    [](const std::string& f) { return f != "ekf"; });
    if (needs_geometry && !noncoplanar_check(config.landmarks)) {
        throw ValidationError(
            "landmark set is coplanar; the proposed and algebraic filters need four "
            "landmarks spanning three dimensions");
    }

    const int stride = config.imu_hz / config.range_hz;
    const auto n_steps =
        static_cast<std::size_t>(std::llround(config.duration_s * config.imu_hz));
    const double dt = 1.0 / config.imu_hz;
    const double dt_range = static_cast<double>(stride) * dt;

    // Truth is deterministic, so one table serves every run and filter.
    std::vector<TruthState> truth;
    truth.reserve(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k) {
        truth.push_back(default_trajectory(static_cast<double>(k) / config.imu_hz,
                                           config.trajectory));
    }

    RunInputs in;
    in.config = &config;
    in.truth = &truth;
    in.epoch_stride = stride;
    in.dt = dt;
    in.dt_range = dt_range;
    in.true_range_table.reserve(n_steps / static_cast<std::size_t>(stride) + 1);
    for (std::size_t k = 0; k <= n_steps; k += static_cast<std::size_t>(stride)) {
        in.true_range_table.push_back(
            true_ranges(truth[k].p, config.landmarks, config.min_range_m));
    }

    std::vector<RunReport> reports;
    reports.reserve(config.filters.size() *
                    static_cast<std::size_t>(config.monte_carlo_runs));

    std::vector<SensorFrame> frames(n_steps + 1);
    for (int run = 0; run < config.monte_carlo_runs; ++run) {
        std::mt19937_64 rng =
            scenario_rng(config.seed, static_cast<std::uint32_t>(run));
        for (std::size_t k = 0; k <= n_steps; ++k) {
            frames[k] = (k % static_cast<std::size_t>(stride) == 0)
                            ? measure(truth[k], config.landmarks, config.noise, rng,
                                      config.min_range_m)
                            : measure_imu_ahrs(truth[k], config.noise, rng);
        }
        in.frames = &frames;

        for (const auto& name : config.filters) {
            if (name == "proposed") {
                reports.push_back(drive_proposed(in, run));
            } else {
                reports.push_back(drive_chain(in, run, name == "ekf"));
            }
        }
    }
    return reports;
}

RunSummary pooled_summary(const std::vector<RunReport>& reports,
                          const std::string& filter) {
    RunSummary pooled;
    double sp = 0.0, sv = 0.0, sg = 0.0;
    long count = 0;
    double conv_sum = 0.0;
    long conv_count = 0;
    for (const auto& report : reports) {
        if (report.filter != filter) continue;
        if (report.summary.diverged) {
            pooled.diverged = true;
            continue;
        }
        if (report.records.empty()) continue;
        const double window_start = report.records.back().t / 2.0;
        for (const auto& rec : report.records) {
            if (rec.t > window_start) {
                sp += rec.ep.squaredNorm();
                sv += rec.ev.squaredNorm();
                sg += rec.eg.squaredNorm();
                ++count;
            }
        }
        if (report.summary.convergence_time_s >= 0.0) {
            conv_sum += report.summary.convergence_time_s;
            ++conv_count;
        }
    }
    if (count > 0) {
        pooled.position_rmse = std::sqrt(sp / static_cast<double>(count));
        pooled.velocity_rmse = std::sqrt(sv / static_cast<double>(count));
        pooled.gravity_rmse = std::sqrt(sg / static_cast<double>(count));
    }
    pooled.convergence_time_s =
        conv_count > 0 ? conv_sum / static_cast<double>(conv_count) : -1.0;
    return pooled;
}

void emit_outputs(const std::vector<RunReport>& reports, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

    for (const auto& report : reports) {
        std::string csv = "t,ep_x,ep_y,ep_z,ev_x,ev_y,ev_z,eg_x,eg_y,eg_z";
        for (int i = 1; i <= report.n_landmarks; ++i) {
            csv += ",er_" + std::to_string(i);
        }
        csv += ",res_r1,res_s8\n";
        for (const auto& rec : report.records) {
            csv += fmt17(rec.t);
            for (int k = 0; k < 3; ++k) csv += "," + fmt17(rec.ep(k));
            for (int k = 0; k < 3; ++k) csv += "," + fmt17(rec.ev(k));
            for (int k = 0; k < 3; ++k) csv += "," + fmt17(rec.eg(k));
            for (int i = 0; i < rec.er.size(); ++i) csv += "," + fmt17(rec.er(i));
            csv += "," + fmt17(rec.res_r1) + "," + fmt17(rec.res_s8) + "\n";
        }
        const fs::path path = fs::path(out_dir) /
                              ("errors_" + report.filter + "_" +
                               std::to_string(report.run_index) + ".csv");
        write_atomic(path, csv);
    }

    json summary = json::object();
    std::vector<std::string> order;
    for (const auto& report : reports) {
        if (std::find(order.begin(), order.end(), report.filter) == order.end()) {
            order.push_back(report.filter);
        }
    }
    for (const auto& name : order) {
        const RunSummary pooled = pooled_summary(reports, name);
        json entry;
        long runs = 0;
        long diverged = 0;
        json conv = json::array();
        for (const auto& report : reports) {
            if (report.filter != name) continue;
            ++runs;
            if (report.summary.diverged) ++diverged;
            conv.push_back(report.summary.convergence_time_s);
        }
        entry["runs"] = runs;
        entry["diverged_runs"] = diverged;
        entry["steady_state"] = {{"position_rmse", pooled.position_rmse},
                                 {"velocity_rmse", pooled.velocity_rmse},
                                 {"gravity_rmse", pooled.gravity_rmse}};
        entry["convergence_time_s"] = conv;
        summary[name] = entry;
    }
    write_atomic(fs::path(out_dir) / "summary.json", summary.dump(2) + "\n");
}

nlohmann::json gramian_to_json(const GramianReport& report) {
    json w = json::array();
    for (Eigen::Index r = 0; r < report.W.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < report.W.cols(); ++c) {
            row.push_back(report.W(r, c));
        }
        w.push_back(row);
    }
    return json{{"interval", {report.interval.first, report.interval.second}},
                {"n", report.W.rows()},
                {"min_eigenvalue", report.min_eigenvalue},
                {"condition_number", report.condition_number},
                {"W", w}};
}

} // namespace lblnav
