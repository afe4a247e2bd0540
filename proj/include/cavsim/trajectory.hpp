#ifndef CAVSIM_TRAJECTORY_HPP
#define CAVSIM_TRAJECTORY_HPP

#include <Eigen/Dense>

#include <vector>

#include "cavsim/errors.hpp"

namespace cavsim {

/// A polynomial position trajectory p(t) = sum_k c_k t^k on [t_start, t_end],
/// SI meters/seconds. Coefficients are ascending powers. Raw interpolants may
/// be non-monotone; monotonicity is checked by check_state_bounds, not here.
struct PolyTrajectory {
  Eigen::VectorXd coefficients;
  double t_start = 0.0;
  double t_end = 0.0;

  PolyTrajectory() = default;
  PolyTrajectory(Eigen::VectorXd coeffs, double start, double end);

  int degree() const { return static_cast<int>(coefficients.size()) - 1; }
};

/// Speed and control-input bounds. v_min must be positive: a vehicle never
/// stops inside the control zone, which keeps position strictly increasing.
struct KinematicLimits {
  double v_min = 1.0;
  double v_max = 15.0;
  double u_min = -3.0;
  double u_max = 3.0;

  void validate() const;
};

/// State of a vehicle at control-zone entry (position is path-local).
struct EntryState {
  double t0 = 0.0;
  double p0 = 0.0;
  double v0 = 0.0;
};

struct State {
  double position;
  double speed;
  double acceleration;
  double jerk;
};

struct TimePosition {
  double t;
  double p;
};

/// Exact speed/acceleration envelope over the trajectory's interval, with the
/// times where each extremum is attained.
struct ExtremaBounds {
  double v_lo, v_hi;
  double a_lo, a_hi;
  double t_v_lo, t_v_hi;
  double t_a_lo, t_a_hi;
};

/// Earliest/latest arrival times at a given distance under bang acceleration
/// to v_max (earliest) or bang deceleration to v_min (latest).
struct ExitRange {
  double earliest;
  double latest;
};

/// Solves the cubic boundary-value problem: position/speed fixed at entry,
/// position fixed and acceleration zero at the exit time. The 4x4 system is
/// solved in entry-shifted time by a pivoted direct method with one
/// refinement pass and a residual verification; coefficients are shifted back
/// to absolute time. Throws SingularSystem for degenerate durations
/// (t_f - t0 < 1e-6 s) or failed verification.
PolyTrajectory solve_cubic_bvp(const EntryState &entry, double p_f, double t_f);

/// Interpolating polynomial of degree n-1 through n (time, position) nodes via
/// a Vandermonde solve. Node times must be strictly increasing and positive.
/// The solve shifts times so the first node sits at 1.0 s (raw Vandermonde
/// systems on large absolute times are catastrophically ill-conditioned),
/// then shifts coefficients back; the interpolant is unchanged by the shift.
/// Throws NonMonotoneNodes on bad nodes, IllConditioned if the verified node
/// residual exceeds 1e-8 relative.
PolyTrajectory interpolate_vandermonde(const std::vector<TimePosition> &nodes);

/// Product formula for the Vandermonde determinant, prod_{i<j}(x_j - x_i).
/// Returns 1 for a single node (empty product).
double vandermonde_determinant(const std::vector<double> &times);

/// Position, speed, acceleration and jerk at time t (Horner evaluation).
/// Throws OutOfDomain outside [t_start, t_end].
State evaluate(const PolyTrajectory &traj, double t);

/// Time at which a strictly increasing trajectory reaches position p, by
/// safeguarded bisection/Newton. Throws OutOfRange if p lies outside the
/// position span, NotMonotone if the endpoints do not bracket.
double invert_position(const PolyTrajectory &traj, double p);

/// Exact extrema of speed and acceleration over [t_start, t_end]: candidates
/// are the interval endpoints plus the real roots of the next derivative.
ExtremaBounds extrema_bounds(const PolyTrajectory &traj);

/// Closed-form integral of squared jerk over the trajectory interval.
double squared_jerk_integral(const PolyTrajectory &traj);

/// Closed-form integral of squared acceleration (energy proxy).
double squared_accel_integral(const PolyTrajectory &traj);

/// Feasible exit-time bracket for covering `distance` from the entry state:
/// earliest under full acceleration then cruise at v_max, latest under full
/// deceleration then cruise at v_min. Exact piecewise kinematics.
ExitRange feasible_exit_range(const EntryState &entry, const KinematicLimits &limits,
                              double distance);

}  // namespace cavsim

#endif  // CAVSIM_TRAJECTORY_HPP
