#ifndef CAVSIM_POLYNOMIAL_HPP
#define CAVSIM_POLYNOMIAL_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <vector>

namespace cavsim {

// Coefficients are stored in ascending powers: p(t) = c[0] + c[1] t + ... + c[d] t^d.

// Horner evaluation with extended-precision accumulation: absolute-time
// coefficients of a trajectory far from t = 0 cancel heavily, and plain
// double Horner loses ~|c_d| t^d * eps of absolute accuracy.
inline double poly_eval(const Eigen::VectorXd &c, double t) {
  long double acc = 0.0L;
  const long double tl = t;
  for (Eigen::Index i = c.size() - 1; i >= 0; --i) acc = acc * tl + c[i];
  return static_cast<double>(acc);
}

inline Eigen::VectorXd poly_derivative(const Eigen::VectorXd &c) {
  if (c.size() <= 1) return Eigen::VectorXd::Zero(1);
  Eigen::VectorXd d(c.size() - 1);
  for (Eigen::Index k = 1; k < c.size(); ++k) d[k - 1] = static_cast<double>(k) * c[k];
  return d;
}

inline Eigen::VectorXd poly_multiply(const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(a.size() + b.size() - 1);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    for (Eigen::Index j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

/// Exact definite integral of a polynomial over [a, b].
inline double poly_definite_integral(const Eigen::VectorXd &c, double a, double b) {
  // Antiderivative evaluated by Horner: F(t) = t * sum_k (c_k / (k+1)) t^k.
  double fa = 0.0, fb = 0.0;
  for (Eigen::Index i = c.size() - 1; i >= 0; --i) {
    const double ck = c[i] / static_cast<double>(i + 1);
    fa = fa * a + ck;
    fb = fb * b + ck;
  }
  return fb * b - fa * a;
}

/// Coefficients of q(t + shift) for a polynomial q given in ascending powers
/// (classic Horner-based Taylor shift). Accumulated in extended precision:
/// the binomial intermediates dwarf the final coefficients when |shift| is
/// large, and the rounding would land straight in the shifted coefficients.
inline Eigen::VectorXd poly_taylor_shift(const Eigen::VectorXd &q, double shift) {
  std::vector<long double> r(q.begin(), q.end());
  const long double s = shift;
  const Eigen::Index d = q.size() - 1;
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = d - 1; k >= j; --k) r[k] += s * r[k + 1];
  Eigen::VectorXd out(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) out[i] = static_cast<double>(r[i]);
  return out;
}

/// All real roots of the polynomial, ascending. Closed form up to degree 2,
/// companion-matrix eigenvalues above that. A numerically zero polynomial has
/// no reported roots.
inline std::vector<double> poly_real_roots(const Eigen::VectorXd &c) {
  const double scale = c.cwiseAbs().maxCoeff();
  std::vector<double> roots;
  if (scale == 0.0) return roots;

  Eigen::Index deg = c.size() - 1;
  while (deg > 0 && std::abs(c[deg]) <= 1e-14 * scale) --deg;
  if (deg == 0) return roots;

  if (deg == 1) {
    roots.push_back(-c[0] / c[1]);
  } else if (deg == 2) {
    const double a = c[2], b = c[1], c0 = c[0];
    const double disc = b * b - 4.0 * a * c0;
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      const double q = -0.5 * (b + (b >= 0.0 ? s : -s));
      roots.push_back(q / a);
      if (q != 0.0) roots.push_back(c0 / q);
      else roots.push_back(0.0);  // b == 0, disc == 0 case collapses to 0
    }
  } else {
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
    for (Eigen::Index i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
    for (Eigen::Index i = 0; i < deg; ++i) companion(i, deg - 1) = -c[i] / c[deg];
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion);
    const auto vals = es.eigenvalues();
    const Eigen::VectorXd dcoef = poly_derivative(c.head(deg + 1));
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
      if (std::abs(vals[i].imag()) > 1e-8 * (1.0 + std::abs(vals[i].real()))) continue;
      double x = vals[i].real();
      for (int it = 0; it < 2; ++it) {  // Newton polish
        const double f = poly_eval(c, x);
        const double df = poly_eval(dcoef, x);
        if (df != 0.0) x -= f / df;
      }
      roots.push_back(x);
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace cavsim

#endif  // CAVSIM_POLYNOMIAL_HPP
