#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lblnav/geo3d.hpp"
#include "lblnav/truthsim.hpp"

namespace lblnav {

/// Minimum admissible transponder distance. Distances at or above r_m keep
/// every 1/r term in the system matrices well conditioned; callers must
/// reject, not clamp, anything smaller.
struct RangeGuard {
    double r_m = 1.0;  // m
};

/// State vector layout, shared by every module that touches the augmented
/// state. For n_L transponders the dimension is 13 + n_L:
///
///   [0..2]              x1  position block
///   [3..5]              x2  velocity block
///   [6..8]              x3  gravity block
///   [9..8+n_L]          per-transponder distances
///   [9+n_L .. 12+n_L]   scalars s8, s9, s10, s11
inline constexpr int kIdxPos = 0;
inline constexpr int kIdxVel = 3;
inline constexpr int kIdxGrav = 6;
inline constexpr int kIdxRange = 9;

inline constexpr int state_dim(int n_landmarks) { return 13 + n_landmarks; }
inline constexpr int idx_s8(int n_landmarks) { return 9 + n_landmarks; }
inline constexpr int output_dim(int n_landmarks) {
    return n_landmarks + n_landmarks * (n_landmarks - 1) / 2;
}

/// Transponder index pairs (i, j), i < j, in the fixed lexicographic order
/// (0,1), (0,2), …, (n_L−2, n_L−1) used for the pair-difference outputs.
std::vector<std::pair<int, int>> landmark_pairs(int n_landmarks);

/// Augmented state in structured form. x1/x2/x3 are the position, velocity,
/// and acceleration-offset blocks of the linear chain; the scalars are the
/// quadratic couplings that make the dynamics linear:
///   s8 = x1·x2, s9 = x1·x3 + ‖x2‖², s10 = x2·x3, s11 = ‖x3‖².
struct LiftedState {
    Vec3 x1 = Vec3::Zero();
    Vec3 x2 = Vec3::Zero();
    Vec3 x3 = Vec3::Zero();
    Eigen::VectorXd range_states;
    double s8 = 0.0;
    double s9 = 0.0;
    double s10 = 0.0;
    double s11 = 0.0;

    /// Flat vector in the layout above.
    Eigen::VectorXd to_vector() const;
};

/// @brief Consistent lift of (x1, x2, x3): distances from x1 plus the four
/// quadratic scalars, all computed from their definitions.
/// Throws RangeTooSmall if any distance falls below guard.r_m.
LiftedState lift_state(const Vec3& x1, const Vec3& x2, const Vec3& x3,
                       const LandmarkSet& landmarks, const RangeGuard& guard = {});

/// @brief System matrix A(t) of the augmented chain in transformed
/// coordinates (x2, x3 inertial), as a function of the input u and the
/// current distances. The (x1,x2,x3) block is a pure integrator chain, so
/// the input u only enters the scalar rows.
Eigen::MatrixXd build_A(const Vec3& u, const Eigen::VectorXd& ranges,
                        const LandmarkSet& landmarks, const RangeGuard& guard = {});

/// @brief Input matrix: u (or the body acceleration, in body coordinates)
/// drives the velocity block only.
Eigen::MatrixXd build_B(int n_landmarks);

/// Measurement model at one acoustic epoch: y = C·x + noise, with the
/// distance-dependent entries evaluated at the measured distances, plus the
/// signal-independent part y_known of the pair-difference outputs.
struct OutputModel {
    Eigen::MatrixXd C;
    Eigen::VectorXd y_known;
};

/// @brief Output matrix and known output vector. The first n_L rows select
/// the distance states; each remaining row encodes one pair difference,
/// 2(s_i−s_j)ᵀ/(r_i+r_j) acting on the position block and ±1 on the two
/// distance states, with known value (‖s_i‖²−‖s_j‖²)/(r_i+r_j).
OutputModel build_C_and_y(const Eigen::VectorXd& ranges_meas,
                          const LandmarkSet& landmarks,
                          const RangeGuard& guard = {});

/// @brief System matrix in original body coordinates (velocity and gravity
/// blocks body-frame): the attitude-dependent form obtained from A(t) by the
/// block-rotation change of coordinates diag(I, Rᵀ, Rᵀ, I).
Eigen::MatrixXd build_body_A(const Vec3& a_meas, const Vec3& w_meas,
                             const Mat3& R_meas, const Eigen::VectorXd& ranges_meas,
                             const LandmarkSet& landmarks,
                             const RangeGuard& guard = {});

} // namespace lblnav
