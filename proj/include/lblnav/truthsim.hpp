#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lblnav/geo3d.hpp"

namespace lblnav {

/// Exact vehicle state at one instant. Linear quantities follow the usual
/// mixed-frame convention: position is inertial, velocity/gravity/angular
/// rate/accelerometer output are body-frame. R maps body to inertial.
struct TruthState {
    double t = 0.0;
    Vec3 p = Vec3::Zero();   // m, inertial
    Vec3 v = Vec3::Zero();   // m/s, body
    Vec3 g = Vec3::Zero();   // m/s², body
    Mat3 R = Mat3::Identity();
    Vec3 w = Vec3::Zero();   // rad/s, body
    Vec3 a = Vec3::Zero();   // m/s², noise-free accelerometer output
};

/// Helical survey pattern with gentle attitude excitation. The default start
/// point sits near the origin at shallow depth so that a filter initialized
/// at zero begins within a few covariance sigmas of the truth; all defaults
/// keep the vehicle far from any transponder position.
struct TrajectoryParams {
    Vec3 center{10.0, 10.0, 1.0};      // m, helix axis at t = 0
    double radius_m = 20.0;
    double period_s = 100.0;           // one horizontal revolution
    double vertical_speed_mps = 0.1;   // depth rate, +z down
    double g0_mps2 = 9.8;              // inertial gravity magnitude, +z
    double pitch_amplitude_rad = 0.08;
    double pitch_period_s = 40.0;
    double roll_amplitude_rad = 0.05;
    double roll_period_s = 25.0;
};

struct NoiseConfig {
    double sigma_range = 1.0;           // m
    double sigma_accel = 2e-3;          // m/s²
    double sigma_gyro = 8.726646259971648e-4;   // rad/s  (0.05 °/s)
    double sigma_roll_pitch = 5.235987755982988e-4;  // rad  (0.03°)
    double sigma_yaw = 5.235987755982989e-3;         // rad  (0.3°)
    std::uint64_t seed = 1;
};

/// One epoch of measurements. `ranges` is empty on IMU/AHRS-only epochs
/// (between acoustic interrogations).
struct SensorFrame {
    double t = 0.0;
    std::vector<double> ranges;  // m, one per transponder
    Vec3 a_meas = Vec3::Zero();  // m/s²
    Vec3 w_meas = Vec3::Zero();  // rad/s
    Mat3 R_meas = Mat3::Identity();
};

/// Inertial positions of the acoustic transponders.
struct LandmarkSet {
    std::vector<Vec3> s;

    int size() const { return static_cast<int>(s.size()); }
};

/// Four-transponder array spanning three dimensions; the standard test
/// geometry for this library.
LandmarkSet default_landmarks();

/// @brief Evaluates the closed-form survey trajectory at time t.
/// The returned state satisfies the kinematic identities exactly: the body
/// velocity is Rᵀṗ, the accelerometer output is Rᵀ(p̈ − g_inertial), and the
/// body gravity is Rᵀg_inertial.
TruthState default_trajectory(double t, const TrajectoryParams& params = {});

/// @brief True transponder distances from inertial position p.
/// Throws RangeTooSmall if any distance falls below min_range, which means
/// the trajectory passes unrealistically close to a transponder.
Eigen::VectorXd true_ranges(const Vec3& p, const LandmarkSet& landmarks,
                            double min_range = 1.0);

/// @brief Full measurement epoch: ranges plus IMU/AHRS, all noise applied.
/// Attitude noise perturbs the true Euler angles before rebuilding R_meas.
/// Draw order per call is fixed (ranges, accelerometer, gyro, roll, pitch,
/// yaw) so a seeded generator reproduces the same frame sequence exactly.
SensorFrame measure(const TruthState& truth, const LandmarkSet& landmarks,
                    const NoiseConfig& noise, std::mt19937_64& rng,
                    double min_range = 1.0);

/// @brief IMU/AHRS-only epoch (no acoustic interrogation this tick).
SensorFrame measure_imu_ahrs(const TruthState& truth, const NoiseConfig& noise,
                             std::mt19937_64& rng);

} // namespace lblnav
