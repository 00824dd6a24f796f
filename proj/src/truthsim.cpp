#include "lblnav/truthsim.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "lblnav/errors.hpp"

namespace lblnav {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

} // namespace

LandmarkSet default_landmarks() {
    LandmarkSet lm;
    lm.s = {
        Vec3(0.0, 0.0, 1000.0),
        Vec3(1000.0, 0.0, 1000.0),
        Vec3(0.0, 1000.0, 1000.0),
        Vec3(0.0, 0.0, 500.0),
    };
    return lm;
}

TruthState default_trajectory(double t, const TrajectoryParams& params) {
    const double theta_rate = kTwoPi / params.period_s;
    const double theta = theta_rate * t;

    const Vec3 p = params.center +
                   Vec3(params.radius_m * std::cos(theta),
                        params.radius_m * std::sin(theta),
                        params.vertical_speed_mps * t);
    const Vec3 pdot(-params.radius_m * theta_rate * std::sin(theta),
                    params.radius_m * theta_rate * std::cos(theta),
                    params.vertical_speed_mps);
    const Vec3 pddot(-params.radius_m * theta_rate * theta_rate * std::cos(theta),
                     -params.radius_m * theta_rate * theta_rate * std::sin(theta),
                     0.0);

    const double pitch_rate_arg = kTwoPi / params.pitch_period_s;
    const double roll_rate_arg = kTwoPi / params.roll_period_s;

    EulerAngles e;
    e.yaw = theta + std::numbers::pi / 2.0;  // nose along the direction of travel
    e.pitch = params.pitch_amplitude_rad * std::sin(pitch_rate_arg * t);
    e.roll = params.roll_amplitude_rad * std::sin(roll_rate_arg * t);

    const double yaw_dot = theta_rate;
    const double pitch_dot =
        params.pitch_amplitude_rad * pitch_rate_arg * std::cos(pitch_rate_arg * t);
    const double roll_dot =
        params.roll_amplitude_rad * roll_rate_arg * std::cos(roll_rate_arg * t);

    TruthState truth;
    truth.t = t;
    truth.p = p;
    truth.R = euler_to_rotation(e);

    // Body angular rate from ZYX Euler-angle rates.
    const double sphi = std::sin(e.roll), cphi = std::cos(e.roll);
    const double sth = std::sin(e.pitch), cth = std::cos(e.pitch);
    truth.w = Vec3(roll_dot - yaw_dot * sth,
                   pitch_dot * cphi + yaw_dot * cth * sphi,
                   yaw_dot * cth * cphi - pitch_dot * sphi);

    const Vec3 g_inertial(0.0, 0.0, params.g0_mps2);
    truth.v = truth.R.transpose() * pdot;
    truth.g = truth.R.transpose() * g_inertial;
    truth.a = truth.R.transpose() * (pddot - g_inertial);
    return truth;
}

Eigen::VectorXd true_ranges(const Vec3& p, const LandmarkSet& landmarks,
                            double min_range) {
    Eigen::VectorXd r(landmarks.size());
    for (int i = 0; i < landmarks.size(); ++i) {
        r(i) = (landmarks.s[i] - p).norm();
        if (r(i) < min_range) {
            std::ostringstream msg;
            msg << "range to transponder " << i + 1 << " is " << r(i)
                << " m, below the minimum standoff " << min_range << " m";
            throw RangeTooSmall(msg.str());
        }
    }
    return r;
}

SensorFrame measure(const TruthState& truth, const LandmarkSet& landmarks,
                    const NoiseConfig& noise, std::mt19937_64& rng,
                    double min_range) {
    std::normal_distribution<double> unit(0.0, 1.0);

    const Eigen::VectorXd r = true_ranges(truth.p, landmarks, min_range);

    SensorFrame frame;
    frame.t = truth.t;
    frame.ranges.resize(landmarks.s.size());
    for (int i = 0; i < landmarks.size(); ++i) {
        frame.ranges[static_cast<std::size_t>(i)] =
            r(i) + noise.sigma_range * unit(rng);
    }

    frame.a_meas = truth.a + noise.sigma_accel * Vec3(unit(rng), unit(rng), unit(rng));
    frame.w_meas = truth.w + noise.sigma_gyro * Vec3(unit(rng), unit(rng), unit(rng));

    EulerAngles e = rotation_to_euler(truth.R);
    e.roll += noise.sigma_roll_pitch * unit(rng);
    e.pitch += noise.sigma_roll_pitch * unit(rng);
    e.yaw += noise.sigma_yaw * unit(rng);
    frame.R_meas = euler_to_rotation(e);
    return frame;
}

SensorFrame measure_imu_ahrs(const TruthState& truth, const NoiseConfig& noise,
                             std::mt19937_64& rng) {
    std::normal_distribution<double> unit(0.0, 1.0);

    SensorFrame frame;
    frame.t = truth.t;
    frame.a_meas = truth.a + noise.sigma_accel * Vec3(unit(rng), unit(rng), unit(rng));
    frame.w_meas = truth.w + noise.sigma_gyro * Vec3(unit(rng), unit(rng), unit(rng));

    EulerAngles e = rotation_to_euler(truth.R);
    e.roll += noise.sigma_roll_pitch * unit(rng);
    e.pitch += noise.sigma_roll_pitch * unit(rng);
    e.yaw += noise.sigma_yaw * unit(rng);
    frame.R_meas = euler_to_rotation(e);
    return frame;
}

} // namespace lblnav
