#include "lblnav/obsv.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "lblnav/errors.hpp"

namespace lblnav {

namespace {

// Linear interpolation weight and bracketing indices for time t on the grid.
struct GridPos {
    std::size_t k0;
    std::size_t k1;
    double w1;
};

GridPos locate(double t, double t0, double dt, std::size_t count) {
    const double s = (t - t0) / dt;
    if (s <= 0.0 || count == 1) return {0, 0, 0.0};
    const auto last = count - 1;
    if (s >= static_cast<double>(last)) return {last, last, 0.0};
    const auto k0 = static_cast<std::size_t>(s);
    return {k0, k0 + 1, s - static_cast<double>(k0)};
}

Eigen::MatrixXd system_matrix_at(double t, const SignalRecord& signals) {
    return build_A(signals.u_at(t), signals.ranges_at(t), signals.landmarks);
}

// One fixed-step fourth-order Runge-Kutta pass for Φ̇ = A(t)·Φ over
// [t_start, t_end], invoking on_epoch(j, Φ) whenever an epoch time is
// crossed. Epochs must be sorted ascending and lie inside the interval.
Eigen::MatrixXd integrate_fixed(double t_start, double t_end, double h,
                                const SignalRecord& signals,
                                const std::vector<double>& epochs,
                                const std::function<void(std::size_t, const Eigen::MatrixXd&)>& on_epoch) {
    const int n = state_dim(signals.landmarks.size());
    Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);

    std::size_t next_epoch = 0;
    const auto emit_due = [&](double t_now) {
        while (next_epoch < epochs.size() && epochs[next_epoch] <= t_now + 1e-12) {
            on_epoch(next_epoch, phi);
            ++next_epoch;
        }
    };
    emit_due(t_start);

    const auto steps = static_cast<long>(std::ceil((t_end - t_start) / h - 1e-12));
    for (long k = 0; k < steps; ++k) {
        const double t = t_start + static_cast<double>(k) * h;
        const double hk = std::min(h, t_end - t);
        const Eigen::MatrixXd a1 = system_matrix_at(t, signals);
        const Eigen::MatrixXd a2 = system_matrix_at(t + 0.5 * hk, signals);
        const Eigen::MatrixXd a3 = system_matrix_at(t + hk, signals);
        const Eigen::MatrixXd k1 = a1 * phi;
        const Eigen::MatrixXd k2 = a2 * (phi + 0.5 * hk * k1);
        const Eigen::MatrixXd k3 = a2 * (phi + 0.5 * hk * k2);
        const Eigen::MatrixXd k4 = a3 * (phi + hk * k3);
        phi += (hk / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        emit_due(t + hk);
    }
    emit_due(t_end);
    return phi;
}

} // namespace

double SignalRecord::tf() const {
    return t0 + dt * static_cast<double>(u.empty() ? 0 : u.size() - 1);
}

Vec3 SignalRecord::u_at(double t) const {
    const GridPos g = locate(t, t0, dt, u.size());
    return (1.0 - g.w1) * u[g.k0] + g.w1 * u[g.k1];
}

Eigen::VectorXd SignalRecord::ranges_at(double t) const {
    const GridPos g = locate(t, t0, dt, ranges.size());
    return (1.0 - g.w1) * ranges[g.k0] + g.w1 * ranges[g.k1];
}

bool noncoplanar_check(const LandmarkSet& landmarks) {
    const int n_l = landmarks.size();
    if (n_l < 4) return false;
    Eigen::MatrixXd diffs(n_l - 1, 3);
    for (int i = 1; i < n_l; ++i) {
        diffs.row(i - 1) = (landmarks.s[static_cast<std::size_t>(i)] - landmarks.s[0]).transpose();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(diffs);
    const auto& sv = svd.singularValues();
    const double tol = 1e-9 * std::max(1.0, sv(0));
    int rank = 0;
    for (int k = 0; k < sv.size(); ++k) {
        if (sv(k) > tol) ++rank;
    }
    return rank == 3;
}

SignalRecord record_true_signals(const TrajectoryParams& params,
                                 const LandmarkSet& landmarks, double t_start,
                                 double t_end, double dt, double min_range) {
    if (!(t_end >= t_start) || !(dt > 0.0)) {
        throw ValidationError("record_true_signals: need t_end >= t_start and dt > 0");
    }
    SignalRecord rec;
    rec.t0 = t_start;
    rec.dt = dt;
    rec.landmarks = landmarks;
    const auto count = static_cast<std::size_t>(std::llround((t_end - t_start) / dt)) + 1;
    rec.u.reserve(count);
    rec.ranges.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const TruthState truth =
            default_trajectory(t_start + static_cast<double>(k) * dt, params);
        rec.u.push_back(truth.R * truth.a);
        rec.ranges.push_back(true_ranges(truth.p, landmarks, min_range));
    }
    return rec;
}

Eigen::MatrixXd transition_matrix(double t_start, double t_end,
                                  const SignalRecord& signals, double tol) {
    if (t_end < t_start) {
        throw ValidationError("transition_matrix: t_end must not precede t_start");
    }
    const int n = state_dim(signals.landmarks.size());
    if (t_end == t_start) {
        return Eigen::MatrixXd::Identity(n, n);
    }

    double h = std::min(signals.dt, t_end - t_start);
    Eigen::MatrixXd coarse = integrate_fixed(t_start, t_end, h, signals, {}, {});
    for (int refinement = 0; refinement < 10; ++refinement) {
        h *= 0.5;
        Eigen::MatrixXd fine = integrate_fixed(t_start, t_end, h, signals, {}, {});
        if ((fine - coarse).cwiseAbs().maxCoeff() < tol) {
            return fine;
        }
        coarse = std::move(fine);
    }
    std::ostringstream msg;
    msg << "transition_matrix: no convergence to " << tol << " on ["
        << t_start << ", " << t_end << "] down to step " << h;
    throw IntegrationFailure(msg.str());
}

GramianReport gramian(double t_start, double t_end, const SignalRecord& signals,
                      double range_dt, double tol) {
    if (t_end < t_start) {
        throw ValidationError("gramian: t_end must not precede t_start");
    }
    if (!(range_dt > 0.0)) {
        throw ValidationError("gramian: range_dt must be positive");
    }
    const int n = state_dim(signals.landmarks.size());

    GramianReport report;
    report.interval = {t_start, t_end};
    report.W = Eigen::MatrixXd::Zero(n, n);

    if (t_end == t_start) {
        report.min_eigenvalue = 0.0;
        report.condition_number = std::numeric_limits<double>::infinity();
        return report;
    }

    std::vector<double> epochs;
    for (double t = t_start; t < t_end - 1e-9; t += range_dt) {
        epochs.push_back(t);
    }
    epochs.push_back(t_end);

    const auto integrand_at = [&](double t, const Eigen::MatrixXd& phi) {
        const Eigen::MatrixXd c = build_C_and_y(signals.ranges_at(t), signals.landmarks).C;
        const Eigen::MatrixXd cphi = c * phi;
        return Eigen::MatrixXd(cphi.transpose() * cphi);
    };

    // One pass accumulates the trapezoid sum; the whole quadrature is then
    // re-run at half the integrator step until two passes agree.
    const auto quadrature = [&](double h) {
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
        Eigen::MatrixXd prev_m;
        double prev_t = 0.0;
        integrate_fixed(t_start, t_end, h, signals, epochs,
                        [&](std::size_t j, const Eigen::MatrixXd& phi) {
                            Eigen::MatrixXd m = integrand_at(epochs[j], phi);
                            if (j > 0) {
                                w += 0.5 * (epochs[j] - prev_t) * (m + prev_m);
                            }
                            prev_m = std::move(m);
                            prev_t = epochs[j];
                        });
        return w;
    };

    double h = std::min(signals.dt, t_end - t_start);
    Eigen::MatrixXd coarse = quadrature(h);
    bool converged = false;
    for (int refinement = 0; refinement < 10 && !converged; ++refinement) {
        h *= 0.5;
        Eigen::MatrixXd fine = quadrature(h);
        const double scale = std::max(1.0, coarse.cwiseAbs().maxCoeff());
        converged = (fine - coarse).cwiseAbs().maxCoeff() < tol * scale;
        coarse = std::move(fine);
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "gramian: quadrature did not converge on [" << t_start << ", "
            << t_end << "]";
        throw IntegrationFailure(msg.str());
    }

    report.W = 0.5 * (coarse + coarse.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(report.W);
    const auto& ev = eig.eigenvalues();
    report.min_eigenvalue = ev(0);
    report.condition_number = ev(0) > 0.0
                                  ? ev(ev.size() - 1) / ev(0)
                                  : std::numeric_limits<double>::infinity();
    return report;
}

} // namespace lblnav
