#include "lblnav/ltv.hpp"

#include <sstream>

#include "lblnav/errors.hpp"

namespace lblnav {

namespace {

void check_ranges(const Eigen::VectorXd& ranges, const LandmarkSet& landmarks,
                  const RangeGuard& guard, const char* who) {
    if (ranges.size() != landmarks.size()) {
        std::ostringstream msg;
        msg << who << ": got " << ranges.size() << " ranges for "
            << landmarks.size() << " transponders";
        throw ValidationError(msg.str());
    }
    for (int i = 0; i < ranges.size(); ++i) {
        if (!(ranges(i) >= guard.r_m)) {
            std::ostringstream msg;
            msg << who << ": range " << i + 1 << " is " << ranges(i)
                << " m, below the minimum standoff " << guard.r_m << " m";
            throw RangeTooSmall(msg.str());
        }
    }
}

} // namespace

std::vector<std::pair<int, int>> landmark_pairs(int n_landmarks) {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(n_landmarks * (n_landmarks - 1) / 2));
    for (int i = 0; i < n_landmarks; ++i) {
        for (int j = i + 1; j < n_landmarks; ++j) {
            pairs.emplace_back(i, j);
        }
    }
    return pairs;
}

Eigen::VectorXd LiftedState::to_vector() const {
    const int n_l = static_cast<int>(range_states.size());
    Eigen::VectorXd x(state_dim(n_l));
    x.segment<3>(kIdxPos) = x1;
    x.segment<3>(kIdxVel) = x2;
    x.segment<3>(kIdxGrav) = x3;
    x.segment(kIdxRange, n_l) = range_states;
    x(idx_s8(n_l) + 0) = s8;
    x(idx_s8(n_l) + 1) = s9;
    x(idx_s8(n_l) + 2) = s10;
    x(idx_s8(n_l) + 3) = s11;
    return x;
}

LiftedState lift_state(const Vec3& x1, const Vec3& x2, const Vec3& x3,
                       const LandmarkSet& landmarks, const RangeGuard& guard) {
    LiftedState lift;
    lift.x1 = x1;
    lift.x2 = x2;
    lift.x3 = x3;
    lift.range_states = true_ranges(x1, landmarks, guard.r_m);
    lift.s8 = x1.dot(x2);
    lift.s9 = x1.dot(x3) + x2.squaredNorm();
    lift.s10 = x2.dot(x3);
    lift.s11 = x3.squaredNorm();
    return lift;
}

Eigen::MatrixXd build_A(const Vec3& u, const Eigen::VectorXd& ranges,
                        const LandmarkSet& landmarks, const RangeGuard& guard) {
    check_ranges(ranges, landmarks, guard, "build_A");
    const int n_l = landmarks.size();
    const int n = state_dim(n_l);
    const int s8 = idx_s8(n_l);

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    A.block<3, 3>(kIdxPos, kIdxVel).setIdentity();
    A.block<3, 3>(kIdxVel, kIdxGrav).setIdentity();

    for (int i = 0; i < n_l; ++i) {
        A.block<1, 3>(kIdxRange + i, kIdxVel) =
            -landmarks.s[static_cast<std::size_t>(i)].transpose() / ranges(i);
        A(kIdxRange + i, s8) = 1.0 / ranges(i);
    }

    A.block<1, 3>(s8 + 0, kIdxPos) = u.transpose();
    A(s8 + 0, s8 + 1) = 1.0;
    A.block<1, 3>(s8 + 1, kIdxVel) = 2.0 * u.transpose();
    A(s8 + 1, s8 + 2) = 3.0;
    A.block<1, 3>(s8 + 2, kIdxGrav) = u.transpose();
    A(s8 + 2, s8 + 3) = 1.0;
    return A;
}

Eigen::MatrixXd build_B(int n_landmarks) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(state_dim(n_landmarks), 3);
    B.block<3, 3>(kIdxVel, 0).setIdentity();
    return B;
}

OutputModel build_C_and_y(const Eigen::VectorXd& ranges_meas,
                          const LandmarkSet& landmarks, const RangeGuard& guard) {
    check_ranges(ranges_meas, landmarks, guard, "build_C_and_y");
    const int n_l = landmarks.size();
    const int n = state_dim(n_l);
    const auto pairs = landmark_pairs(n_l);
    const int m = output_dim(n_l);

    OutputModel out;
    out.C = Eigen::MatrixXd::Zero(m, n);
    out.y_known = Eigen::VectorXd::Zero(m);

    for (int i = 0; i < n_l; ++i) {
        out.C(i, kIdxRange + i) = 1.0;
        out.y_known(i) = ranges_meas(i);
    }

    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto [i, j] = pairs[k];
        const int row = n_l + static_cast<int>(k);
        const Vec3& si = landmarks.s[static_cast<std::size_t>(i)];
        const Vec3& sj = landmarks.s[static_cast<std::size_t>(j)];
        const double denom = ranges_meas(i) + ranges_meas(j);
        out.C.block<1, 3>(row, kIdxPos) = 2.0 * (si - sj).transpose() / denom;
        out.C(row, kIdxRange + i) = 1.0;
        out.C(row, kIdxRange + j) = -1.0;
        out.y_known(row) = (si.squaredNorm() - sj.squaredNorm()) / denom;
    }
    return out;
}

Eigen::MatrixXd build_body_A(const Vec3& a_meas, const Vec3& w_meas,
                             const Mat3& R_meas, const Eigen::VectorXd& ranges_meas,
                             const LandmarkSet& landmarks, const RangeGuard& guard) {
    check_ranges(ranges_meas, landmarks, guard, "build_body_A");
    const int n_l = landmarks.size();
    const int n = state_dim(n_l);
    const int s8 = idx_s8(n_l);
    const Mat3 Sw = skew(w_meas);

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    A.block<3, 3>(kIdxPos, kIdxVel) = R_meas;
    A.block<3, 3>(kIdxVel, kIdxVel) = -Sw;
    A.block<3, 3>(kIdxVel, kIdxGrav).setIdentity();
    A.block<3, 3>(kIdxGrav, kIdxGrav) = -Sw;

    for (int i = 0; i < n_l; ++i) {
        A.block<1, 3>(kIdxRange + i, kIdxVel) =
            -(landmarks.s[static_cast<std::size_t>(i)].transpose() * R_meas) /
            ranges_meas(i);
        A(kIdxRange + i, s8) = 1.0 / ranges_meas(i);
    }

    A.block<1, 3>(s8 + 0, kIdxPos) = a_meas.transpose() * R_meas.transpose();
    A(s8 + 0, s8 + 1) = 1.0;
    A.block<1, 3>(s8 + 1, kIdxVel) = 2.0 * a_meas.transpose();
    A(s8 + 1, s8 + 2) = 3.0;
    A.block<1, 3>(s8 + 2, kIdxGrav) = a_meas.transpose();
    A(s8 + 2, s8 + 3) = 1.0;
    return A;
}

} // namespace lblnav
