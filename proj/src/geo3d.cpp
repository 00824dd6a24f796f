#include "lblnav/geo3d.hpp"

#include <algorithm>
#include <cmath>

namespace lblnav {

Mat3 skew(const Vec3& w) {
    Mat3 S;
    S <<    0.0, -w.z(),  w.y(),
          w.z(),    0.0, -w.x(),
         -w.y(),  w.x(),    0.0;
    return S;
}

Mat3 euler_to_rotation(const EulerAngles& e) {
    const Eigen::AngleAxisd Rz(e.yaw, Vec3::UnitZ());
    const Eigen::AngleAxisd Ry(e.pitch, Vec3::UnitY());
    const Eigen::AngleAxisd Rx(e.roll, Vec3::UnitX());
    return (Rz * Ry * Rx).toRotationMatrix();
}

EulerAngles rotation_to_euler(const Mat3& R) {
    EulerAngles e;
    e.pitch = std::asin(std::clamp(-R(2, 0), -1.0, 1.0));
    e.roll = std::atan2(R(2, 1), R(2, 2));
    e.yaw = std::atan2(R(1, 0), R(0, 0));
    return e;
}

Mat3 integrate_attitude(const Mat3& R, const Vec3& w, double dt) {
    const double angle = w.norm() * dt;
    // Below this threshold sin(θ)/θ and (1−cos θ)/θ² are 1 and 1/2 to full
    // double precision, so the series form avoids a 0/0 without branching on
    // exact zero.
    if (angle < 1e-12) {
        const Mat3 S = skew(w * dt);
        return R * (Mat3::Identity() + S + 0.5 * S * S);
    }
    const Vec3 axis = w / w.norm();
    return R * Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

Mat3 orthonormalize(const Mat3& R) {
    Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 U = svd.matrixU();
    Mat3 V = svd.matrixV();
    // Polar factor U·Vᵀ is the nearest orthogonal matrix; flip one column if
    // the determinant came out −1 so the result is a proper rotation.
    if ((U * V.transpose()).determinant() < 0.0) {
        U.col(2) *= -1.0;
    }
    return U * V.transpose();
}

} // namespace lblnav
