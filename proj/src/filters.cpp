#include "lblnav/filters.hpp"

#include <cmath>
#include <sstream>

#include "lblnav/errors.hpp"

namespace lblnav {

namespace {

Eigen::VectorXd frame_ranges(const SensorFrame& frame) {
    return Eigen::Map<const Eigen::VectorXd>(
        frame.ranges.data(), static_cast<Eigen::Index>(frame.ranges.size()));
}

// Derivative of the augmented mean: χ̇ = 𝒜(χ)·χ + a into the velocity block.
// 𝒜 is rebuilt from the distance entries of the state passed in, so every
// Runge-Kutta stage sees a system matrix consistent with that stage.
Eigen::VectorXd chi_dot(const Eigen::VectorXd& chi, const Vec3& a_meas,
                        const Vec3& w_meas, const Mat3& R_meas,
                        const LandmarkSet& landmarks, const RangeGuard& guard) {
    const Eigen::VectorXd r = chi.segment(kIdxRange, landmarks.size());
    const Eigen::MatrixXd A = build_body_A(a_meas, w_meas, R_meas, r, landmarks, guard);
    Eigen::VectorXd dot = A * chi;
    dot.segment<3>(kIdxVel) += a_meas;
    return dot;
}

} // namespace

FilterTuning FilterTuning::defaults(int n_landmarks) {
    const int n = state_dim(n_landmarks);
    const int m = output_dim(n_landmarks);
    FilterTuning tuning;
    tuning.Qx = 1e-5 * Eigen::MatrixXd::Identity(n, n);
    tuning.Qy = Eigen::MatrixXd::Identity(m, m);
    tuning.Qy.bottomRightCorner(m - n_landmarks, m - n_landmarks) *= 2.0;
    return tuning;
}

AugmentedState init_filter(const SensorFrame& first_frame,
                           const LandmarkSet& landmarks,
                           const FilterTuning& tuning, const RangeGuard& guard) {
    const int n_l = landmarks.size();
    const int n = state_dim(n_l);
    if (static_cast<int>(first_frame.ranges.size()) != n_l) {
        std::ostringstream msg;
        msg << "init_filter: first frame carries " << first_frame.ranges.size()
            << " ranges for " << n_l << " transponders";
        throw ValidationError(msg.str());
    }
    if (tuning.Qx.rows() != n || tuning.Qy.rows() != output_dim(n_l)) {
        throw ValidationError("init_filter: tuning dimensions do not match the landmark count");
    }

    AugmentedState state;
    state.t = first_frame.t;
    state.chi = Eigen::VectorXd::Zero(n);
    state.chi.segment<3>(kIdxGrav) = Vec3(0.0, 0.0, 10.0);
    state.chi.segment(kIdxRange, n_l) = frame_ranges(first_frame);
    state.chi(idx_s8(n_l) + 3) = 100.0;
    for (int i = 0; i < n_l; ++i) {
        if (!(state.chi(kIdxRange + i) >= guard.r_m)) {
            std::ostringstream msg;
            msg << "init_filter: measured range " << i + 1 << " is "
                << state.chi(kIdxRange + i) << " m, below the minimum standoff "
                << guard.r_m << " m";
            throw RangeTooSmall(msg.str());
        }
    }

    Eigen::VectorXd diag(n);
    diag.segment<3>(kIdxPos).setConstant(100.0);
    diag.segment<3>(kIdxVel).setConstant(1.0);
    diag.segment<3>(kIdxGrav).setConstant(1.0);
    diag.segment(kIdxRange, n_l).setConstant(1.0);
    diag(idx_s8(n_l) + 0) = 100.0;
    diag(idx_s8(n_l) + 1) = 100.0;
    diag(idx_s8(n_l) + 2) = 100.0;
    diag(idx_s8(n_l) + 3) = 1e4;
    state.P = diag.asDiagonal();
    return state;
}

AugmentedState predict(const AugmentedState& state, const Vec3& a_meas,
                       const Vec3& w_meas, const Mat3& R_meas, double dt,
                       const LandmarkSet& landmarks, const FilterTuning& tuning,
                       const RangeGuard& guard) {
    if (!(dt > 0.0)) {
        throw ValidationError("predict: dt must be positive");
    }
    const int n = static_cast<int>(state.chi.size());

    // Covariance transition is linearized at the pre-step state.
    const Eigen::MatrixXd A0 = build_body_A(
        a_meas, w_meas, R_meas, state.chi.segment(kIdxRange, landmarks.size()),
        landmarks, guard);

    const Eigen::VectorXd k1 = chi_dot(state.chi, a_meas, w_meas, R_meas, landmarks, guard);
    const Eigen::VectorXd k2 =
        chi_dot(state.chi + 0.5 * dt * k1, a_meas, w_meas, R_meas, landmarks, guard);
    const Eigen::VectorXd k3 =
        chi_dot(state.chi + 0.5 * dt * k2, a_meas, w_meas, R_meas, landmarks, guard);
    const Eigen::VectorXd k4 =
        chi_dot(state.chi + dt * k3, a_meas, w_meas, R_meas, landmarks, guard);

    AugmentedState next;
    next.t = state.t + dt;
    next.chi = state.chi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    next.last_innovation = state.last_innovation;

    if (!next.chi.allFinite() || next.chi.cwiseAbs().maxCoeff() > 1e9) {
        throw DivergenceDetected("predict: state left the numerically sane region");
    }

    Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
    phi += dt * A0;
    phi.noalias() += (0.5 * dt * dt) * (A0 * A0);
    next.P.noalias() = phi * state.P * phi.transpose();
    next.P += dt * tuning.Qx;
    next.P = 0.5 * (next.P + next.P.transpose()).eval();
    return next;
}

AugmentedState update(const AugmentedState& state, const SensorFrame& frame,
                      const LandmarkSet& landmarks, const FilterTuning& tuning,
                      double dt_range, const RangeGuard& guard) {
    if (!(dt_range > 0.0)) {
        throw ValidationError("update: dt_range must be positive");
    }
    const int n = static_cast<int>(state.chi.size());
    const OutputModel out = build_C_and_y(frame_ranges(frame), landmarks, guard);
    const Eigen::MatrixXd rd = tuning.Qy / dt_range;

    const Eigen::VectorXd innovation = out.y_known - out.C * state.chi;
    const Eigen::MatrixXd cp = out.C * state.P;
    Eigen::MatrixXd s = cp * out.C.transpose() + rd;
    s = 0.5 * (s + s.transpose()).eval();

    const Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) {
        throw SingularInnovation("update: innovation covariance is not positive definite");
    }
    const Eigen::MatrixXd gain = llt.solve(cp).transpose();

    AugmentedState next;
    next.t = state.t;
    next.chi = state.chi + gain * innovation;
    next.last_innovation = innovation;

    const Eigen::MatrixXd joseph = Eigen::MatrixXd::Identity(n, n) - gain * out.C;
    next.P.noalias() = joseph * state.P * joseph.transpose();
    next.P.noalias() += gain * rd * gain.transpose();
    next.P = 0.5 * (next.P + next.P.transpose()).eval();
    return next;
}

NavEstimate extract_nav(const AugmentedState& state) {
    NavEstimate nav;
    nav.t = state.t;
    nav.p_hat = state.chi.segment<3>(kIdxPos);
    nav.v_hat = state.chi.segment<3>(kIdxVel);
    nav.g_hat = state.chi.segment<3>(kIdxGrav);
    return nav;
}

Vec3 trilaterate(const Eigen::VectorXd& ranges, const LandmarkSet& landmarks) {
    const int n_l = landmarks.size();
    if (ranges.size() != n_l) {
        throw ValidationError("trilaterate: range count does not match landmark count");
    }
    if (n_l < 2) {
        throw DegenerateGeometry("trilaterate: need at least two landmarks");
    }

    Eigen::MatrixXd lhs(n_l - 1, 3);
    Eigen::VectorXd rhs(n_l - 1);
    const Vec3& s1 = landmarks.s[0];
    for (int i = 1; i < n_l; ++i) {
        const Vec3& si = landmarks.s[static_cast<std::size_t>(i)];
        lhs.row(i - 1) = 2.0 * (si - s1).transpose();
        rhs(i - 1) = si.squaredNorm() - s1.squaredNorm() - ranges(i) * ranges(i) +
                     ranges(0) * ranges(0);
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(lhs);
    if (qr.rank() < 3) {
        throw DegenerateGeometry(
            "trilaterate: landmark geometry does not determine all three coordinates");
    }
    return qr.solve(rhs);
}

ChainState chain_init(const SensorFrame& first_frame) {
    ChainState state;
    state.t = first_frame.t;
    state.x.setZero();
    state.x.segment<3>(6) = first_frame.R_meas * Vec3(0.0, 0.0, 10.0);
    state.P.setIdentity();
    state.P.topLeftCorner<3, 3>() *= 100.0;
    return state;
}

void chain_predict(ChainState& state, const Vec3& u, double dt, double q_intensity) {
    if (!(dt > 0.0)) {
        throw ValidationError("chain_predict: dt must be positive");
    }
    const Vec3 x2 = state.x.segment<3>(3);
    const Vec3 x3 = state.x.segment<3>(6);

    // Zero-order-hold discretization; exact because the chain is nilpotent.
    state.x.segment<3>(0) += dt * x2 + (0.5 * dt * dt) * (x3 + u);
    state.x.segment<3>(3) += dt * (x3 + u);
    state.t += dt;

    Eigen::Matrix<double, 9, 9> phi = Eigen::Matrix<double, 9, 9>::Identity();
    phi.block<3, 3>(0, 3) = dt * Mat3::Identity();
    phi.block<3, 3>(3, 6) = dt * Mat3::Identity();
    phi.block<3, 3>(0, 6) = (0.5 * dt * dt) * Mat3::Identity();
    state.P = phi * state.P * phi.transpose() +
              (q_intensity * dt) * Eigen::Matrix<double, 9, 9>::Identity();
    state.P = (0.5 * (state.P + state.P.transpose())).eval();

    if (!state.x.allFinite() || state.x.cwiseAbs().maxCoeff() > 1e9) {
        throw DivergenceDetected("chain_predict: state left the numerically sane region");
    }
}

void ekf_range_update(ChainState& state, const Eigen::VectorXd& ranges_meas,
                      const LandmarkSet& landmarks, double meas_var,
                      const RangeGuard& guard) {
    const int n_l = landmarks.size();
    if (ranges_meas.size() != n_l) {
        throw ValidationError("ekf_range_update: range count does not match landmark count");
    }
    const Vec3 p = state.x.segment<3>(0);

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n_l, 9);
    Eigen::VectorXd innovation(n_l);
    for (int i = 0; i < n_l; ++i) {
        const Vec3 d = landmarks.s[static_cast<std::size_t>(i)] - p;
        const double r_hat = d.norm();
        if (r_hat < guard.r_m) {
            std::ostringstream msg;
            msg << "ekf_range_update: predicted range " << i + 1 << " is " << r_hat
                << " m, below the minimum standoff " << guard.r_m << " m";
            throw RangeTooSmall(msg.str());
        }
        h.block<1, 3>(i, 0) = -d.transpose() / r_hat;
        innovation(i) = ranges_meas(i) - r_hat;
    }

    Eigen::MatrixXd s = h * state.P * h.transpose();
    s.diagonal().array() += meas_var;
    s = 0.5 * (s + s.transpose()).eval();
    const Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) {
        throw SingularInnovation("ekf_range_update: innovation covariance is not positive definite");
    }
    const Eigen::MatrixXd gain = llt.solve(h * state.P).transpose();

    state.x += gain * innovation;
    const Eigen::Matrix<double, 9, 9> joseph =
        Eigen::Matrix<double, 9, 9>::Identity() - gain * h;
    state.P = joseph * state.P * joseph.transpose() +
              meas_var * gain * gain.transpose();
    state.P = (0.5 * (state.P + state.P.transpose())).eval();
}

void position_update(ChainState& state, const Vec3& p_meas, double meas_var) {
    const Vec3 innovation = p_meas - state.x.segment<3>(0);

    Mat3 s = state.P.topLeftCorner<3, 3>();
    s.diagonal().array() += meas_var;
    s = 0.5 * (s + s.transpose()).eval();
    const Eigen::LLT<Mat3> llt(s);
    if (llt.info() != Eigen::Success) {
        throw SingularInnovation("position_update: innovation covariance is not positive definite");
    }
    const Eigen::Matrix<double, 9, 3> gain =
        llt.solve(state.P.topRows<3>()).transpose();

    state.x += gain * innovation;
    Eigen::Matrix<double, 9, 9> joseph = Eigen::Matrix<double, 9, 9>::Identity();
    joseph.leftCols<3>() -= gain;
    state.P = joseph * state.P * joseph.transpose() +
              meas_var * gain * gain.transpose();
    state.P = (0.5 * (state.P + state.P.transpose())).eval();
}

NavEstimate chain_nav(const ChainState& state, const Mat3& R_meas) {
    NavEstimate nav;
    nav.t = state.t;
    nav.p_hat = state.x.segment<3>(0);
    nav.v_hat = R_meas.transpose() * state.x.segment<3>(3);
    nav.g_hat = R_meas.transpose() * state.x.segment<3>(6);
    return nav;
}

NavEstimate ekf_step(ChainState& state, const SensorFrame& frame, double dt,
                     const LandmarkSet& landmarks, const ChainTuning& tuning,
                     const RangeGuard& guard) {
    chain_predict(state, frame.R_meas * frame.a_meas, dt, tuning.q_intensity);
    if (!frame.ranges.empty()) {
        ekf_range_update(state, frame_ranges(frame), landmarks, tuning.meas_var, guard);
    }
    return chain_nav(state, frame.R_meas);
}

NavEstimate linear_kf_step(ChainState& state, const SensorFrame& frame, double dt,
                           const LandmarkSet& landmarks, const ChainTuning& tuning) {
    chain_predict(state, frame.R_meas * frame.a_meas, dt, tuning.q_intensity);
    if (!frame.ranges.empty()) {
        const Vec3 fix = trilaterate(frame_ranges(frame), landmarks);
        position_update(state, fix, tuning.meas_var);
    }
    return chain_nav(state, frame.R_meas);
}

} // namespace lblnav
