#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lblnav/ltv.hpp"
#include "lblnav/truthsim.hpp"

namespace lblnav {

/// Time-indexed input and distance signals on a uniform grid, the raw
/// material for transition-matrix and Gramian evaluation. `u` is the chain
/// input in inertial coordinates (R·a for a real run); values between grid
/// points are linearly interpolated and clamped at the ends.
struct SignalRecord {
    double t0 = 0.0;
    double dt = 0.01;
    std::vector<Vec3> u;
    std::vector<Eigen::VectorXd> ranges;
    LandmarkSet landmarks;

    double tf() const;
    Vec3 u_at(double t) const;
    Eigen::VectorXd ranges_at(double t) const;
};

/// Observability certificate for one interval.
struct GramianReport {
    Eigen::MatrixXd W;
    double min_eigenvalue = 0.0;
    double condition_number = 0.0;
    std::pair<double, double> interval{0.0, 0.0};
};

/// @brief True iff some four landmarks span three dimensions (rank of the
/// difference set {s_i − s_1} is 3, judged by singular values).
bool noncoplanar_check(const LandmarkSet& landmarks);

/// @brief Samples the closed-form trajectory into a SignalRecord on
/// [t_start, t_end] with grid spacing dt.
SignalRecord record_true_signals(const TrajectoryParams& params,
                                 const LandmarkSet& landmarks, double t_start,
                                 double t_end, double dt = 0.01,
                                 double min_range = 1.0);

/// @brief Transition matrix Φ(t_end, t_start) of the augmented system,
/// mapping states at t_start to states at t_end. Integrates Φ̇ = A(t)·Φ by
/// Runge-Kutta with step halving until two consecutive refinements agree to
/// tol in max-abs.
/// Throws IntegrationFailure if agreement is not reached, ValidationError if
/// t_end < t_start.
Eigen::MatrixXd transition_matrix(double t_start, double t_end,
                                  const SignalRecord& signals, double tol = 1e-8);

/// @brief Observability Gramian ∫ Φᵀ(t,t_start)·Cᵀ(t)·C(t)·Φ(t,t_start) dt
/// over [t_start, t_end], by trapezoidal quadrature at the acoustic epochs
/// (spacing range_dt). The report carries the symmetrized Gramian, its
/// smallest eigenvalue, and its condition number.
GramianReport gramian(double t_start, double t_end, const SignalRecord& signals,
                      double range_dt = 1.0, double tol = 1e-8);

} // namespace lblnav
