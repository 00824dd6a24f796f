#pragma once

#include <Eigen/Dense>

#include "lblnav/geo3d.hpp"
#include "lblnav/ltv.hpp"
#include "lblnav/truthsim.hpp"

namespace lblnav {

/// Augmented filter state in original coordinates: position inertial,
/// velocity and gravity body-frame, then the distance states and the four
/// quadratic scalars (layout as in ltv.hpp).
struct AugmentedState {
    double t = 0.0;
    Eigen::VectorXd chi;
    Eigen::MatrixXd P;
    Eigen::VectorXd last_innovation;  // empty until the first update
};

/// Noise intensities for the augmented filter. Qx is the state-disturbance
/// intensity (continuous-time, discretized as Qx·dt per prediction step),
/// Qy the output-noise intensity (divided by the acoustic-epoch spacing at
/// update time).
struct FilterTuning {
    Eigen::MatrixXd Qx;
    Eigen::MatrixXd Qy;

    /// Unit-range/double-pair weighting with a 1e-5 disturbance floor.
    static FilterTuning defaults(int n_landmarks);
};

/// Point estimate of the navigation quantities.
struct NavEstimate {
    double t = 0.0;
    Vec3 p_hat = Vec3::Zero();  // m, inertial
    Vec3 v_hat = Vec3::Zero();  // m/s, body
    Vec3 g_hat = Vec3::Zero();  // m/s², body
};

/// @brief Standard cold start: zero position and velocity, gravity guess
/// (0,0,10) m/s², distance states copied from the first measurement epoch,
/// quadratic scalars (0,0,0,100). Initial covariance reflects those guesses.
AugmentedState init_filter(const SensorFrame& first_frame,
                           const LandmarkSet& landmarks,
                           const FilterTuning& tuning,
                           const RangeGuard& guard = {});

/// @brief Propagates mean and covariance over one IMU interval dt.
/// Mean: fourth-order Runge-Kutta on χ̇ = 𝒜(t)·χ + B·a, with 𝒜 rebuilt at
/// every stage from that stage's own distance entries. Covariance:
/// Φ·P·Φᵀ + Qx·dt with Φ = I + 𝒜dt + 𝒜²dt²/2, then symmetrized.
/// Throws DivergenceDetected if any state entry exceeds 1e9 in magnitude.
AugmentedState predict(const AugmentedState& state, const Vec3& a_meas,
                       const Vec3& w_meas, const Mat3& R_meas, double dt,
                       const LandmarkSet& landmarks, const FilterTuning& tuning,
                       const RangeGuard& guard = {});

/// @brief Measurement update at an acoustic epoch. Builds the output model
/// from the measured distances, computes the gain against Qy/dt_range, and
/// applies a Joseph-form covariance update.
/// Throws SingularInnovation if the innovation covariance is not positive
/// definite.
AugmentedState update(const AugmentedState& state, const SensorFrame& frame,
                      const LandmarkSet& landmarks, const FilterTuning& tuning,
                      double dt_range = 1.0, const RangeGuard& guard = {});

/// @brief Projection of the augmented state onto (p, v, g).
NavEstimate extract_nav(const AugmentedState& state);

/// @brief Algebraic position fix: least-squares solution of the differenced
/// squared-distance equations 2(s_i−s_1)ᵀp = ‖s_i‖²−‖s_1‖²−r_i²+r_1².
/// Throws DegenerateGeometry when the landmark geometry does not pin down
/// all three coordinates.
Vec3 trilaterate(const Eigen::VectorXd& ranges, const LandmarkSet& landmarks);

/// Nine-state benchmark filter on the inertial chain ẋ1 = x2, ẋ2 = x3 + u,
/// ẋ3 = 0 with u = R·a. Used by both baselines; they differ only in the
/// measurement model.
struct ChainState {
    double t = 0.0;
    Eigen::Matrix<double, 9, 1> x = Eigen::Matrix<double, 9, 1>::Zero();
    Eigen::Matrix<double, 9, 9> P = Eigen::Matrix<double, 9, 9>::Identity();
};

struct ChainTuning {
    double q_intensity = 1e-5;  // process-disturbance intensity
    double meas_var = 1.0;      // per-output measurement variance
};

/// @brief Cold start matching init_filter: zero position/velocity, gravity
/// guess rotated into inertial coordinates through the measured attitude.
ChainState chain_init(const SensorFrame& first_frame);

/// @brief Exact discretization of the chain over dt with zero-order-hold
/// input u.
void chain_predict(ChainState& state, const Vec3& u, double dt, double q_intensity);

/// @brief EKF range update: nonlinear outputs h_i = ‖s_i − x1‖ linearized at
/// the current estimate.
void ekf_range_update(ChainState& state, const Eigen::VectorXd& ranges_meas,
                      const LandmarkSet& landmarks, double meas_var,
                      const RangeGuard& guard = {});

/// @brief Linear position update from an algebraic fix.
void position_update(ChainState& state, const Vec3& p_meas, double meas_var);

/// @brief Navigation estimate from a chain state; velocity and gravity are
/// mapped back to body coordinates through the measured attitude.
NavEstimate chain_nav(const ChainState& state, const Mat3& R_meas);

/// @brief Baseline 1: one EKF cycle (predict over dt, range update when the
/// frame carries distances).
NavEstimate ekf_step(ChainState& state, const SensorFrame& frame, double dt,
                     const LandmarkSet& landmarks, const ChainTuning& tuning,
                     const RangeGuard& guard = {});

/// @brief Baseline 2: one trilateration-fed linear KF cycle.
/// DegenerateGeometry from the algebraic fix propagates to the caller.
NavEstimate linear_kf_step(ChainState& state, const SensorFrame& frame, double dt,
                           const LandmarkSet& landmarks, const ChainTuning& tuning);

} // namespace lblnav
