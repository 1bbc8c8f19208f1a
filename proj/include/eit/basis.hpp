#pragma once

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "eit/errors.hpp"

namespace eit {

// Trigonometric current patterns on the unit circle, indexed j = 1, 2, ...:
// odd j drives sin(n*phi)/sqrt(pi), even j drives cos(n*phi)/sqrt(pi), where
// n = trig_order(j). The patterns are L^2(circle)-orthonormal and mean free.
// All functions here take this 1-based pattern index.

inline int trig_order(int j) {
  if (j < 1) throw ParameterError("trig_order: pattern index must be >= 1");
  return (j % 2 == 1) ? (j + 1) / 2 : j / 2;
}

// Fixed-size family g_1 .. g_m of boundary current patterns. m must be even
// so every frequency up to m/2 appears with both trig types.
struct CurrentBasis {
  int m = 0;

  explicit CurrentBasis(int m_in) : m(m_in) {
    if (m < 2 || m % 2 != 0) throw ParameterError("CurrentBasis: m must be even and >= 2");
  }

  int check_index(int j) const {
    if (j < 1 || j > m) throw ParameterError("CurrentBasis: pattern index out of range");
    return j;
  }
  int max_order() const { return m / 2; }
};

inline bool is_sine(int j) {
  if (j < 1) throw ParameterError("is_sine: pattern index must be >= 1");
  return j % 2 == 1;
}

// Boundary current density g_j at angle phi.
inline double current_density(int j, double phi) {
  const int n = trig_order(j);
  const double c = 1.0 / std::sqrt(M_PI);
  return is_sine(j) ? c * std::sin(n * phi) : c * std::cos(n * phi);
}

inline double current_density(const CurrentBasis& basis, int j, double phi) {
  return current_density(basis.check_index(j), phi);
}

namespace detail {
inline std::complex<double> int_pow(std::complex<double> z, int n) {
  std::complex<double> out(1.0, 0.0);
  for (int k = 0; k < n; ++k) out *= z;
  return out;
}
}  // namespace detail

// Harmonic potential with unit conductivity and Neumann data g_j:
// u_j = r^n trig(n*phi) / (n sqrt(pi)), mean free on the boundary.
inline double background_potential(int j, double x, double y) {
  const int n = trig_order(j);
  const std::complex<double> zn = detail::int_pow({x, y}, n);
  const double c = 1.0 / (n * std::sqrt(M_PI));
  return is_sine(j) ? c * zn.imag() : c * zn.real();
}

// Gradient of background_potential. The 1/n factor cancels against the power
// rule, leaving a degree n-1 harmonic polynomial in each component.
inline Eigen::Vector2d background_gradient(int j, double x, double y) {
  const int n = trig_order(j);
  const std::complex<double> w = detail::int_pow({x, y}, n - 1);
  const double c = 1.0 / std::sqrt(M_PI);
  if (is_sine(j)) return {c * w.imag(), c * w.real()};
  return {c * w.real(), -c * w.imag()};
}

// Pointwise product of two background gradients. Each product collapses to a
// single separable term
//    coeff * r^radial_degree * {cos|sin}(angular_order * phi),
// with coeff in {+1/pi, -1/pi, 0}: products of equal-type patterns give a
// cosine term in the order difference, mixed products give a sine term in
// (sine order - cosine order), which vanishes identically when the orders tie.
struct ZetaTerm {
  int radial_degree = 0;   // n_i + n_j - 2
  int angular_order = 0;   // |n_i - n_j|
  bool sine_type = false;  // true: sin term, false: cos term
  double coeff = 0.0;

  double eval(double x, double y) const {
    if (coeff == 0.0) return 0.0;
    const double r = std::hypot(x, y);
    const double phi = std::atan2(y, x);
    const double radial = std::pow(r, radial_degree);
    const double ang = sine_type ? std::sin(angular_order * phi) : std::cos(angular_order * phi);
    return coeff * radial * ang;
  }
};

inline ZetaTerm zeta_term(int i, int j) {
  const int ni = trig_order(i), nj = trig_order(j);
  ZetaTerm t;
  t.radial_degree = ni + nj - 2;
  t.angular_order = std::abs(ni - nj);
  if (is_sine(i) == is_sine(j)) {
    t.sine_type = false;
    t.coeff = 1.0 / M_PI;
  } else {
    t.sine_type = true;
    if (ni == nj) {
      t.coeff = 0.0;
    } else {
      const int ns = is_sine(i) ? ni : nj;  // order of the sine-type factor
      const int nc = is_sine(i) ? nj : ni;
      t.coeff = (ns > nc ? 1.0 : -1.0) / M_PI;
    }
  }
  return t;
}

inline double zeta_eval(int i, int j, double x, double y) { return zeta_term(i, j).eval(x, y); }

// Boundary response of the homogeneous disk: applying the current pattern g_j
// returns the trace g_j / n, so the pattern-space response matrix is
// diag(1/trig_order(j)).
inline Eigen::VectorXd ntd_identity(int m) {
  if (m < 1) throw ParameterError("ntd_identity: m must be >= 1");
  Eigen::VectorXd d(m);
  for (int j = 1; j <= m; ++j) d[j - 1] = 1.0 / trig_order(j);
  return d;
}

}  // namespace eit
