#pragma once

#include <Eigen/Dense>

namespace lblnav {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Attitude parameterization used at the API boundary. Angles in radians,
/// ZYX convention (yaw about z, then pitch about y, then roll about x),
/// rotating body coordinates into inertial coordinates.
struct EulerAngles {
    double roll = 0.0;
    double pitch = 0.0;
    double yaw = 0.0;
};

/// @brief Skew-symmetric matrix S(w) such that S(w)·x = w × x.
Mat3 skew(const Vec3& w);

/// @brief Rotation matrix from body to inertial coordinates, ZYX convention.
Mat3 euler_to_rotation(const EulerAngles& e);

/// @brief Inverse of euler_to_rotation for pitch strictly inside (−π/2, π/2).
/// At the gimbal-lock boundary the roll/yaw split is not unique; this
/// implementation clamps the pitch argument into [−1, 1] before asin and
/// reports roll and yaw from the remaining entries.
EulerAngles rotation_to_euler(const Mat3& R);

/// @brief Propagates Ṙ = R·S(w) over a step of length dt with w held
/// constant, using the closed-form axis-angle exponential. Exact for
/// constant rate, so R stays on the rotation group up to roundoff.
Mat3 integrate_attitude(const Mat3& R, const Vec3& w, double dt);

/// @brief Nearest proper rotation to R (polar projection via SVD).
/// Used periodically to absorb floating-point drift in long integrations.
Mat3 orthonormalize(const Mat3& R);

} // namespace lblnav
