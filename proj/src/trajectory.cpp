#include "cavsim/trajectory.hpp"

#include <Eigen/LU>

#include <cmath>
#include <string>

#include "cavsim/polynomial.hpp"

namespace cavsim {

namespace {

constexpr double kMinBvpDuration = 1e-6;    // below this the boundary rows collide
constexpr double kInterpOrigin = 1.0;       // first node is mapped to this time
constexpr double kBvpResidualTol = 1e-9;
constexpr double kInterpResidualTol = 1e-8;

double domain_slack(const PolyTrajectory &traj) {
  return 1e-9 * std::max(1.0, std::max(std::abs(traj.t_start), std::abs(traj.t_end)));
}

}  // namespace

PolyTrajectory::PolyTrajectory(Eigen::VectorXd coeffs, double start, double end)
    : coefficients(std::move(coeffs)), t_start(start), t_end(end) {
  if (coefficients.size() < 2)
    throw std::invalid_argument("PolyTrajectory needs degree >= 1");
  if (!(t_start < t_end))
    throw std::invalid_argument("PolyTrajectory needs t_start < t_end");
}

void KinematicLimits::validate() const {
  if (!(0.0 < v_min && v_min < v_max))
    throw ConfigError("kinematic limits require 0 < v_min < v_max");
  if (!(u_min < 0.0 && 0.0 < u_max))
    throw ConfigError("kinematic limits require u_min < 0 < u_max");
}

PolyTrajectory solve_cubic_bvp(const EntryState &entry, double p_f, double t_f) {
  const double duration = t_f - entry.t0;
  if (!(duration >= kMinBvpDuration))
    throw SingularSystem("cubic boundary-value problem degenerate: duration " +
                         std::to_string(duration) + " s");

  // Boundary rows in entry-shifted time, descending coefficient order:
  // p(0) = p0, v(0) = v0, p(T) = p_f, a(T) = 0.
  const double T = duration;
  Eigen::Matrix4d A;
  A << 0.0, 0.0, 0.0, 1.0,
       0.0, 0.0, 1.0, 0.0,
       T * T * T, T * T, T, 1.0,
       6.0 * T, 2.0, 0.0, 0.0;
  Eigen::Vector4d rhs(entry.p0, entry.v0, p_f, 0.0);

  Eigen::PartialPivLU<Eigen::Matrix4d> lu(A);
  Eigen::Vector4d phi = lu.solve(rhs);
  phi += lu.solve(rhs - A * phi);  // one refinement pass

  const double residual = (A * phi - rhs).cwiseAbs().maxCoeff();
  if (!(residual <= kBvpResidualTol * std::max(1.0, rhs.cwiseAbs().maxCoeff())))
    throw SingularSystem("cubic boundary-value solve failed verification, residual " +
                         std::to_string(residual));

  Eigen::VectorXd local(4);
  local << phi[3], phi[2], phi[1], phi[0];  // ascending
  return PolyTrajectory(poly_taylor_shift(local, -entry.t0), entry.t0, t_f);
}

PolyTrajectory interpolate_vandermonde(const std::vector<TimePosition> &nodes) {
  const int n = static_cast<int>(nodes.size());
  if (n < 2) throw NonMonotoneNodes("interpolation needs at least two nodes");
  for (int i = 0; i < n; ++i) {
    if (!(nodes[i].t > 0.0))
      throw NonMonotoneNodes("node times must be positive, got " +
                             std::to_string(nodes[i].t));
    if (i > 0 && !(nodes[i].t > nodes[i - 1].t))
      throw NonMonotoneNodes("node times must be strictly increasing");
  }

  const double shift = nodes.front().t - kInterpOrigin;
  Eigen::MatrixXd vand(n, n);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    const double s = nodes[i].t - shift;
    double power = 1.0;
    for (int j = 0; j < n; ++j) {
      vand(i, j) = power;
      power *= s;
    }
    rhs[i] = nodes[i].p;
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(vand);
  Eigen::VectorXd local = lu.solve(rhs);
  for (int pass = 0; pass < 2; ++pass) local += lu.solve(rhs - vand * local);

  PolyTrajectory traj(poly_taylor_shift(local, -shift), nodes.front().t,
                      nodes.back().t);
  for (const auto &node : nodes) {
    const double residual = std::abs(poly_eval(traj.coefficients, node.t) - node.p);
    if (!(residual <= kInterpResidualTol * std::max(1.0, std::abs(node.p))))
      throw IllConditioned("interpolation residual " + std::to_string(residual) +
                           " at t = " + std::to_string(node.t));
  }
  return traj;
}

double vandermonde_determinant(const std::vector<double> &times) {
  double det = 1.0;
  for (std::size_t i = 0; i < times.size(); ++i)
    for (std::size_t j = i + 1; j < times.size(); ++j) det *= times[j] - times[i];
  return det;
}

State evaluate(const PolyTrajectory &traj, double t) {
  const double slack = domain_slack(traj);
  if (t < traj.t_start - slack || t > traj.t_end + slack)
    throw OutOfDomain("t = " + std::to_string(t) + " outside [" +
                      std::to_string(traj.t_start) + ", " +
                      std::to_string(traj.t_end) + "]");
  const Eigen::VectorXd v = poly_derivative(traj.coefficients);
  const Eigen::VectorXd a = poly_derivative(v);
  const Eigen::VectorXd j = poly_derivative(a);
  return State{poly_eval(traj.coefficients, t), poly_eval(v, t), poly_eval(a, t),
               poly_eval(j, t)};
}

double invert_position(const PolyTrajectory &traj, double p) {
  const double p_lo = poly_eval(traj.coefficients, traj.t_start);
  const double p_hi = poly_eval(traj.coefficients, traj.t_end);
  if (!(p_hi > p_lo)) throw NotMonotone("endpoint positions do not bracket");

  const double tol = 1e-9 * std::max(1.0, std::abs(p));
  if (p < p_lo - tol || p > p_hi + tol)
    throw OutOfRange("position " + std::to_string(p) + " outside span [" +
                     std::to_string(p_lo) + ", " + std::to_string(p_hi) + "]");
  const double target = std::min(std::max(p, p_lo), p_hi);

  const Eigen::VectorXd speed = poly_derivative(traj.coefficients);
  double lo = traj.t_start, hi = traj.t_end;
  double t = lo + (hi - lo) * (target - p_lo) / (p_hi - p_lo);
  for (int it = 0; it < 128; ++it) {
    const double f = poly_eval(traj.coefficients, t) - target;
    if (std::abs(f) <= tol) return t;
    if (f > 0.0) hi = t; else lo = t;
    const double v = poly_eval(speed, t);
    double next = (v > 0.0) ? t - f / v : lo;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // bisection safeguard
    t = next;
  }
  return t;
}

ExtremaBounds extrema_bounds(const PolyTrajectory &traj) {
  const Eigen::VectorXd v = poly_derivative(traj.coefficients);
  const Eigen::VectorXd a = poly_derivative(v);
  const Eigen::VectorXd j = poly_derivative(a);

  const auto scan = [&](const Eigen::VectorXd &poly, const Eigen::VectorXd &dpoly,
                        double &lo, double &hi, double &t_lo, double &t_hi) {
    lo = hi = poly_eval(poly, traj.t_start);
    t_lo = t_hi = traj.t_start;
    const auto consider = [&](double t) {
      const double val = poly_eval(poly, t);
      if (val < lo) { lo = val; t_lo = t; }
      if (val > hi) { hi = val; t_hi = t; }
    };
    consider(traj.t_end);
    for (double root : poly_real_roots(dpoly))
      if (root > traj.t_start && root < traj.t_end) consider(root);
  };

  ExtremaBounds b{};
  scan(v, a, b.v_lo, b.v_hi, b.t_v_lo, b.t_v_hi);
  scan(a, j, b.a_lo, b.a_hi, b.t_a_lo, b.t_a_hi);
  return b;
}

double squared_jerk_integral(const PolyTrajectory &traj) {
  const Eigen::VectorXd j =
      poly_derivative(poly_derivative(poly_derivative(traj.coefficients)));
  return poly_definite_integral(poly_multiply(j, j), traj.t_start, traj.t_end);
}

double squared_accel_integral(const PolyTrajectory &traj) {
  const Eigen::VectorXd a = poly_derivative(poly_derivative(traj.coefficients));
  return poly_definite_integral(poly_multiply(a, a), traj.t_start, traj.t_end);
}

ExitRange feasible_exit_range(const EntryState &entry, const KinematicLimits &limits,
                              double distance) {
  if (!(distance > 0.0)) throw std::invalid_argument("distance must be positive");

  // Full acceleration to v_max, then cruise.
  const double d_acc = (limits.v_max * limits.v_max - entry.v0 * entry.v0) /
                       (2.0 * limits.u_max);
  double earliest;
  if (distance <= d_acc) {
    earliest = (std::sqrt(entry.v0 * entry.v0 + 2.0 * limits.u_max * distance) -
                entry.v0) / limits.u_max;
  } else {
    earliest = (limits.v_max - entry.v0) / limits.u_max +
               (distance - d_acc) / limits.v_max;
  }

  // Full deceleration to v_min, then cruise. Both quotients below are taken
  // with u_min < 0; the pre-cruise branch picks the first crossing time.
  const double d_dec = (limits.v_min * limits.v_min - entry.v0 * entry.v0) /
                       (2.0 * limits.u_min);
  double latest;
  if (distance <= d_dec) {
    latest = (std::sqrt(entry.v0 * entry.v0 + 2.0 * limits.u_min * distance) -
              entry.v0) / limits.u_min;
  } else {
    latest = (limits.v_min - entry.v0) / limits.u_min +
             (distance - d_dec) / limits.v_min;
  }

  return ExitRange{entry.t0 + earliest, entry.t0 + latest};
}

}  // namespace cavsim
