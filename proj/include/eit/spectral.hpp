#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "eit/basis.hpp"
#include "eit/errors.hpp"
#include "eit/quadrature.hpp"

namespace eit {

// Separable polynomial mode on the disk:
//    zeta_hat(r, phi) = scale * r^radial_degree * {cos|sin}(angular_order * phi).
// scale is chosen so that the sensitivity operator below has uniform column
// norms per radial degree; see build_spectral_model.
struct Monomial {
  int radial_degree = 0;
  int angular_order = 0;
  bool sine_type = false;
  double scale = 1.0;

  double eval(double x, double y) const {
    const double r = std::hypot(x, y);
    const double phi = std::atan2(y, x);
    const double ang = sine_type ? std::sin(angular_order * phi) : std::cos(angular_order * phi);
    return scale * std::pow(r, radial_degree) * ang;
  }
};

// Coefficient-space model of the linearized pattern-pair response.
//
// Every gradient product of two background potentials collapses to a single
// monomial, so the map from mode coefficients to the vectorized response
// matrix is a matrix T with exactly one nonzero per (pattern pair) row and
// mutually disjoint column supports. Consequently T^T T is diagonal; its
// entries depend only on the radial degree a and equal 4 / ((2a+1) pi),
// which makes the whole regularization algebra closed form.
struct SpectralModel {
  int m = 0;        // number of boundary patterns (even)
  int m_prime = 0;  // number of modes, m^2/4
  std::vector<Monomial> monomials;
  Eigen::MatrixXd T;        // m^2 x m_prime, one nonzero per row
  Eigen::VectorXd tt_diag;  // diag(T^T T), descending
  double lambda_max = 0.0;  // tt_diag[0] = 4/pi
  double lambda_min = 0.0;  // tt_diag[m_prime-1] = 4/((2m-3) pi)

  // Row of vec(.) holding response entry (i, j); pattern indices are 1-based.
  int row(int i, int j) const { return (i - 1) * m + (j - 1); }

  double kappa_eval(const Eigen::VectorXd& coeff, double x, double y) const {
    double s = 0.0;
    for (int k = 0; k < m_prime; ++k) s += coeff[k] * monomials[k].eval(x, y);
    return s;
  }
};

namespace detail {
inline void require_even_m(int m, const char* where) {
  if (m < 2 || m % 2 != 0) throw ParameterError(std::string(where) + ": m must be even and >= 2");
}
}  // namespace detail

inline SpectralModel build_spectral_model(int m) {
  detail::require_even_m(m, "build_spectral_model");
  SpectralModel model;
  model.m = m;
  model.m_prime = m * m / 4;

  // Modes ordered by radial degree a ascending, then angular order l
  // ascending, cosine before sine. For each a the admissible l share a's
  // parity and run up to min(a, m-2-a); l >= 1 contributes both trig types.
  std::map<std::tuple<int, int, int>, int> index;  // (a, l, sine) -> column
  for (int a = 0; a <= m - 2; ++a) {
    const int l_max = std::min(a, m - 2 - a);
    for (int l = a % 2; l <= l_max; l += 2) {
      for (int type = 0; type < (l == 0 ? 1 : 2); ++type) {
        Monomial mono;
        mono.radial_degree = a;
        mono.angular_order = l;
        mono.sine_type = (type == 1);
        mono.scale = (l == 0) ? std::sqrt((2.0 * a + 1.0) / (2.0 * M_PI))
                              : std::sqrt((2.0 * a + 1.0) / M_PI);
        index[{a, l, type}] = static_cast<int>(model.monomials.size());
        model.monomials.push_back(mono);
      }
    }
  }
  if (static_cast<int>(model.monomials.size()) != model.m_prime)
    throw NumericalError("build_spectral_model: mode count mismatch");

  model.T = Eigen::MatrixXd::Zero(m * m, model.m_prime);
  for (int i = 1; i <= m; ++i) {
    for (int j = 1; j <= m; ++j) {
      const ZetaTerm t = zeta_term(i, j);
      if (t.coeff == 0.0) continue;
      const auto it = index.find({t.radial_degree, t.angular_order, t.sine_type ? 1 : 0});
      if (it == index.end()) throw NumericalError("build_spectral_model: unindexed mode");
      model.T(model.row(i, j), it->second) = t.coeff / model.monomials[it->second].scale;
    }
  }

  model.tt_diag.resize(model.m_prime);
  for (int k = 0; k < model.m_prime; ++k) {
    model.tt_diag[k] = 4.0 / ((2.0 * model.monomials[k].radial_degree + 1.0) * M_PI);
  }
  model.lambda_max = model.tt_diag.maxCoeff();
  model.lambda_min = model.tt_diag.minCoeff();
  return model;
}

// Row-major flatten of a square matrix and its inverse.
inline Eigen::VectorXd vec_response(const Eigen::MatrixXd& V) {
  if (V.rows() != V.cols()) throw ParameterError("vec_response: matrix must be square");
  const int m = static_cast<int>(V.rows());
  Eigen::VectorXd v(m * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) v[i * m + j] = V(i, j);
  return v;
}

inline Eigen::MatrixXd unvec_response(const Eigen::VectorXd& v, int m) {
  if (v.size() != static_cast<Eigen::Index>(m) * m)
    throw ParameterError("unvec_response: size mismatch");
  Eigen::MatrixXd V(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) V(i, j) = v[i * m + j];
  return V;
}

// Unregularized least-squares mode coefficients for a response matrix:
// gamma = (T^T T)^{-1} T^T vec(V), diagonal solve.
inline Eigen::VectorXd coeff_from_response(const SpectralModel& model, const Eigen::MatrixXd& V) {
  const Eigen::VectorXd tv = model.T.transpose() * vec_response(V);
  return tv.array() / model.tt_diag.array();
}

// Tikhonov-regularized coefficients beta = (alpha I + T^T T)^{-1} T^T vec(V).
inline Eigen::VectorXd tikhonov_coeff(const SpectralModel& model, const Eigen::MatrixXd& V,
                                      double alpha) {
  if (!(alpha >= 0.0)) throw ParameterError("tikhonov_coeff: alpha must be >= 0");
  const Eigen::VectorXd tv = model.T.transpose() * vec_response(V);
  return tv.array() / (model.tt_diag.array() + alpha);
}

// Spectral filter factors lambda_k / (lambda_k + alpha) so that the
// regularized coefficients are the filtered unregularized ones.
inline Eigen::VectorXd filter_factors(const SpectralModel& model, double alpha) {
  if (!(alpha >= 0.0)) throw ParameterError("filter_factors: alpha must be >= 0");
  return model.tt_diag.array() / (model.tt_diag.array() + alpha);
}

// A-priori regularization parameter for relative noise level delta:
// alpha = lambda_min * delta (3 + delta) / (1 - delta). This choice minimizes
// the delta-uniform worst-case factor in the coefficient error bound.
inline double alpha_rule(int m, double delta) {
  detail::require_even_m(m, "alpha_rule");
  if (!(delta >= 0.0) || !(delta < 1.0)) throw ParameterError("alpha_rule: require 0 <= delta < 1");
  const double lambda_min = 4.0 / ((2.0 * m - 3.0) * M_PI);
  return lambda_min * delta * (3.0 + delta) / (1.0 - delta);
}

// Closed-form worst-case bound on |beta(alpha, noisy) - gamma(clean)|_2 given
// the Frobenius norms of the clean response V and the noise E. Splits into a
// regularization term, a propagated-noise term, and a cross term.
inline double coeff_error_bound(const SpectralModel& model, double alpha, double norm_v,
                                double norm_e) {
  if (!(alpha >= 0.0)) throw ParameterError("coeff_error_bound: alpha must be >= 0");
  if (!(norm_v >= 0.0) || !(norm_e >= 0.0))
    throw ParameterError("coeff_error_bound: norms must be >= 0");
  const double l1 = model.lambda_max;
  const double lm = model.lambda_min;
  const double denom = (lm + alpha) * (lm + alpha);
  const double reg = alpha * alpha * l1 * norm_v * norm_v / (lm * lm * denom);
  const double noise = l1 * norm_e * norm_e / denom;
  const double cross = (4.0 * lm + 2.0 * alpha) * l1 * norm_v * norm_e / (lm * denom);
  return std::sqrt(reg + noise + cross);
}

// Pattern-pair response of a smooth perturbation kappa by quadrature:
// S_ij = integral over the disk of kappa * grad(u_i) . grad(u_j). Exact when
// kappa is a polynomial of total degree <= kappa_degree.
inline Eigen::MatrixXd apply_sensitivity(int m, const std::function<double(double, double)>& kappa,
                                         int kappa_degree) {
  detail::require_even_m(m, "apply_sensitivity");
  if (kappa_degree < 0) throw ParameterError("apply_sensitivity: kappa_degree must be >= 0");
  const DiskRule rule = disk_rule(kappa_degree + 2 * (m / 2) - 2 + 2);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd grads(m, 2);
  for (size_t q = 0; q < rule.x.size(); ++q) {
    const double x = rule.x[q], y = rule.y[q];
    const double wk = rule.w[q] * kappa(x, y);
    for (int j = 1; j <= m; ++j) grads.row(j - 1) = background_gradient(j, x, y).transpose();
    S.noalias() += wk * (grads * grads.transpose());
  }
  return S;
}

// Numerical cross-check of the spectral model, independent of the stored T.
//
// For every pattern pair the gradient product is expanded in the mode basis
// by quadrature: true inner products against every mode are assembled and the
// exact closed-form mode Gram (block diagonal over angular order and trig
// type) is solved. Because each gradient product is a single mode up to
// scale, the recovered coefficient rows rebuild T; the eigenvalues of the
// rebuilt normal matrix are then compared against tt_diag. The mode Gram
// blocks are Hilbert-like, so this check is meant for moderate m.
struct SpectrumCheck {
  Eigen::VectorXd recovered;  // eigenvalues of rebuilt T^T T, ascending
  Eigen::VectorXd expected;   // tt_diag sorted ascending
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;   // relative to the matching expected eigenvalue
};

inline SpectrumCheck spectrum_check(int m) {
  detail::require_even_m(m, "spectrum_check");
  if (m > 16) throw ParameterError("spectrum_check: m must be <= 16 (Gram conditioning)");
  const SpectralModel model = build_spectral_model(m);
  const int mp = model.m_prime;

  // Group mode columns by (angular order, trig type).
  std::map<std::pair<int, int>, std::vector<int>> groups;
  for (int k = 0; k < mp; ++k) {
    groups[{model.monomials[k].angular_order, model.monomials[k].sine_type ? 1 : 0}].push_back(k);
  }

  // Quadrature nodes: gradient products have degree <= m-2 and modes degree
  // <= m-2, so degree 2m-4 integrates every product exactly.
  const DiskRule rule = disk_rule(2 * m - 4 + 2);
  const int nq = static_cast<int>(rule.x.size());
  Eigen::MatrixXd mode_vals(nq, mp);
  for (int k = 0; k < mp; ++k)
    for (int q = 0; q < nq; ++q) mode_vals(q, k) = model.monomials[k].eval(rule.x[q], rule.y[q]);

  Eigen::MatrixXd grads(m, 2);
  Eigen::MatrixXd zeta_vals(nq, m * m);
  for (int q = 0; q < nq; ++q) {
    for (int j = 1; j <= m; ++j)
      grads.row(j - 1) = background_gradient(j, rule.x[q], rule.y[q]).transpose();
    const Eigen::MatrixXd Z = grads * grads.transpose();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) zeta_vals(q, i * m + j) = Z(i, j);
  }

  // b(row, k) = integral of (gradient product) * mode_k.
  Eigen::MatrixXd b(m * m, mp);
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(rule.w.data(), nq);
  b.noalias() = (zeta_vals.transpose() * w.asDiagonal() * mode_vals);

  // Solve the exact mode Gram per group to recover expansion coefficients.
  Eigen::MatrixXd T_num = Eigen::MatrixXd::Zero(m * m, mp);
  for (const auto& [key, cols] : groups) {
    const int g = static_cast<int>(cols.size());
    Eigen::MatrixXd G(g, g);
    for (int a = 0; a < g; ++a) {
      for (int c = 0; c < g; ++c) {
        const Monomial& ma = model.monomials[cols[a]];
        const Monomial& mc = model.monomials[cols[c]];
        const double ang = (key.first == 0) ? 2.0 * M_PI : M_PI;
        G(a, c) = ma.scale * mc.scale * ang / (ma.radial_degree + mc.radial_degree + 2.0);
      }
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    if (ldlt.info() != Eigen::Success) throw NumericalError("spectrum_check: Gram factorization failed");
    Eigen::MatrixXd rhs(g, m * m);
    for (int a = 0; a < g; ++a) rhs.row(a) = b.col(cols[a]).transpose();
    const Eigen::MatrixXd sol = ldlt.solve(rhs);
    for (int a = 0; a < g; ++a) T_num.col(cols[a]) = sol.row(a).transpose();
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(T_num.transpose() * T_num);
  if (eig.info() != Eigen::Success) throw NumericalError("spectrum_check: eigensolve failed");

  SpectrumCheck out;
  out.recovered = eig.eigenvalues();
  Eigen::VectorXd exp_sorted = model.tt_diag;
  std::sort(exp_sorted.data(), exp_sorted.data() + exp_sorted.size());
  out.expected = exp_sorted;
  out.max_abs_err = (out.recovered - out.expected).cwiseAbs().maxCoeff();
  out.max_rel_err =
      ((out.recovered - out.expected).cwiseAbs().cwiseQuotient(out.expected)).maxCoeff();
  return out;
}

// Diagnostic: eigenvalues of the true L^2 Gram of the gradient products
// themselves (closed form, no quadrature), sorted descending. These are NOT
// tt_diag; the coefficient-space normal matrix and the function-space Gram
// differ because the modes are not L^2-orthonormal.
inline Eigen::VectorXd true_l2_spectrum(int m) {
  detail::require_even_m(m, "true_l2_spectrum");
  const int mm = m * m;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(mm, mm);
  for (int i = 1; i <= m; ++i) {
    for (int j = 1; j <= m; ++j) {
      const ZetaTerm a = zeta_term(i, j);
      if (a.coeff == 0.0) continue;
      for (int p = 1; p <= m; ++p) {
        for (int q = 1; q <= m; ++q) {
          const ZetaTerm c = zeta_term(p, q);
          if (c.coeff == 0.0) continue;
          if (a.angular_order != c.angular_order || a.sine_type != c.sine_type) continue;
          const double ang = (a.angular_order == 0) ? 2.0 * M_PI : M_PI;
          gram((i - 1) * m + (j - 1), (p - 1) * m + (q - 1)) =
              a.coeff * c.coeff * ang / (a.radial_degree + c.radial_degree + 2.0);
        }
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericalError("true_l2_spectrum: eigensolve failed");
  return eig.eigenvalues().reverse();
}

}  // namespace eit
