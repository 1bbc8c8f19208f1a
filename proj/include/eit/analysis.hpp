#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "eit/errors.hpp"
#include "eit/forward.hpp"
#include "eit/mesh.hpp"
#include "eit/phantom.hpp"
#include "eit/quadrature.hpp"
#include "eit/reconstruct.hpp"
#include "eit/spectral.hpp"

namespace eit {

// L^2-orthonormal polynomial basis on the unit disk spanning exactly the
// same space as the spectral model's modes (same radial-degree / angular-
// order index set). Used for stable projections: the raw modes share angular
// factors and are far from orthogonal, so projecting through them directly
// would mean solving Hilbert-like Gram systems.
class ZernikeBasis {
 public:
  explicit ZernikeBasis(int m) : model_(build_spectral_model(m)) {
    norms_.resize(model_.m_prime);
    for (int k = 0; k < model_.m_prime; ++k) {
      const Monomial& mode = model_.monomials[k];
      const double n = mode.radial_degree;
      norms_[k] = (mode.angular_order == 0) ? std::sqrt((n + 1.0) / M_PI)
                                            : std::sqrt((2.0 * n + 2.0) / M_PI);
    }
  }

  int size() const { return model_.m_prime; }
  int m() const { return model_.m; }
  const std::vector<Monomial>& modes() const { return model_.monomials; }

  // Values of all basis functions at one point.
  void eval_all(double x, double y, Eigen::VectorXd& out) const {
    const int mp = model_.m_prime;
    out.resize(mp);
    const double r = std::hypot(x, y);
    const double phi = std::atan2(y, x);
    const double x_jac = 1.0 - 2.0 * r * r;
    for (int k = 0; k < mp; ++k) {
      const Monomial& mode = model_.monomials[k];
      const int n = mode.radial_degree;
      const int l = mode.angular_order;
      const double radial = radial_value(n, l, r, x_jac);
      const double ang = mode.sine_type ? std::sin(l * phi) : std::cos(l * phi);
      out[k] = norms_[k] * radial * ang;
    }
  }

  double eval_sum(const Eigen::VectorXd& coeff, double x, double y) const {
    Eigen::VectorXd vals;
    eval_all(x, y, vals);
    return coeff.dot(vals);
  }

  // Exact change of basis to the model's modes: each radial function is a
  // polynomial with integer monomial coefficients, accumulated per angular
  // block. Coefficients can be large at high degree; evaluation through
  // eval_sum is the numerically stable path.
  Eigen::VectorXd to_mode_coefficients(const Eigen::VectorXd& coeff) const {
    if (coeff.size() != model_.m_prime)
      throw ParameterError("ZernikeBasis: coefficient length mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(model_.m_prime);
    for (int k = 0; k < model_.m_prime; ++k) {
      if (coeff[k] == 0.0) continue;
      const Monomial& mode = model_.monomials[k];
      const int n = mode.radial_degree;
      const int l = mode.angular_order;
      const int p = (n - l) / 2;  // number of lower-degree terms
      const int q = (n + l) / 2;
      // term_s multiplies r^(n-2s); the s = 0 value is binomial(n, p).
      double term = 1.0;
      for (int i = 1; i <= p; ++i) term = term * (n - p + i) / i;
      for (int s = 0; s <= p; ++s) {
        const int a = n - 2 * s;
        const int idx = mode_index(a, l, mode.sine_type);
        out[idx] += coeff[k] * norms_[k] * term / model_.monomials[idx].scale;
        term = -term * (q - s) * (p - s) / ((s + 1.0) * (n - s));
      }
    }
    return out;
  }

 private:
  double radial_value(int n, int l, double r, double x) const {
    // Radial polynomial via the three-term recurrence of the shifted Jacobi
    // family with parameters (l, 0), evaluated at x = 1 - 2 r^2.
    const int t_final = (n - l) / 2;
    const double a = l;
    double p_prev = 1.0;
    if (t_final == 0) return std::pow(r, l);
    double p_curr = ((a + 2.0) * x + a) / 2.0;
    for (int t = 2; t <= t_final; ++t) {
      const double c1 = 2.0 * t * (t + a) * (2.0 * t + a - 2.0);
      const double c2 = (2.0 * t + a - 1.0) * ((2.0 * t + a) * (2.0 * t + a - 2.0) * x + a * a);
      const double c3 = 2.0 * (t + a - 1.0) * (t - 1.0) * (2.0 * t + a);
      const double p_next = (c2 * p_curr - c3 * p_prev) / c1;
      p_prev = p_curr;
      p_curr = p_next;
    }
    const double sign = (t_final % 2 == 0) ? 1.0 : -1.0;
    return sign * std::pow(r, l) * p_curr;
  }

  int mode_index(int a, int l, bool sine) const {
    for (int k = 0; k < model_.m_prime; ++k) {
      const Monomial& mode = model_.monomials[k];
      if (mode.radial_degree == a && mode.angular_order == l && mode.sine_type == sine) return k;
    }
    throw NumericalError("ZernikeBasis: mode lookup failed");
  }

  SpectralModel model_;
  std::vector<double> norms_;
};

// Galerkin projection of a contrast field onto the model's mode span.
struct ProjectionResult {
  Eigen::VectorXd ortho_coeff;  // coefficients in the orthonormal disk basis
  Eigen::VectorXd mode_coeff;   // the same function in the model's mode basis
  double l2_error = 0.0;        // |kappa - P kappa| in L^2
};

namespace detail {
// Accumulate integrals of kappa against all basis functions and of kappa^2
// over one triangle, splitting recursively where the field is detected
// non-constant (for piecewise-constant fields) up to the given depth.
inline void accumulate_projection(const ZernikeBasis& basis,
                                  const std::function<double(double, double)>& kappa,
                                  const std::vector<TriPoint>& ref_rule, double ax, double ay,
                                  double bx, double by, double cx, double cy, int depth,
                                  Eigen::VectorXd& b, double& kappa_sq,
                                  Eigen::VectorXd& scratch) {
  if (depth > 0) {
    const double vals[7] = {kappa(ax, ay),
                            kappa(bx, by),
                            kappa(cx, cy),
                            kappa(0.5 * (ax + bx), 0.5 * (ay + by)),
                            kappa(0.5 * (bx + cx), 0.5 * (by + cy)),
                            kappa(0.5 * (cx + ax), 0.5 * (cy + ay)),
                            kappa((ax + bx + cx) / 3.0, (ay + by + cy) / 3.0)};
    bool mixed = false;
    for (int i = 1; i < 7; ++i) mixed = mixed || (vals[i] != vals[0]);
    if (mixed) {
      const double abx = 0.5 * (ax + bx), aby = 0.5 * (ay + by);
      const double bcx = 0.5 * (bx + cx), bcy = 0.5 * (by + cy);
      const double cax = 0.5 * (cx + ax), cay = 0.5 * (cy + ay);
      accumulate_projection(basis, kappa, ref_rule, ax, ay, abx, aby, cax, cay, depth - 1, b,
                            kappa_sq, scratch);
      accumulate_projection(basis, kappa, ref_rule, bx, by, bcx, bcy, abx, aby, depth - 1, b,
                            kappa_sq, scratch);
      accumulate_projection(basis, kappa, ref_rule, cx, cy, cax, cay, bcx, bcy, depth - 1, b,
                            kappa_sq, scratch);
      accumulate_projection(basis, kappa, ref_rule, abx, aby, bcx, bcy, cax, cay, depth - 1, b,
                            kappa_sq, scratch);
      return;
    }
  }
  const std::vector<TriPoint> rule = map_rule(ref_rule, ax, ay, bx, by, cx, cy);
  for (const TriPoint& pt : rule) {
    const double kv = kappa(pt.x, pt.y);
    if (kv == 0.0) continue;
    basis.eval_all(pt.x, pt.y, scratch);
    b.noalias() += (pt.w * kv) * scratch;
    kappa_sq += pt.w * kv * kv;
  }
}

inline ProjectionResult project_impl(const ZernikeBasis& basis,
                                     const std::function<double(double, double)>& kappa,
                                     const TriMesh& mesh, int depth) {
  const std::vector<TriPoint> ref_rule = triangle_rule(std::max(2 * (basis.m() - 2), 2));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(basis.size());
  Eigen::VectorXd scratch;
  double kappa_sq = 0.0;
  for (const auto& tri : mesh.triangles) {
    const Vec2& a = mesh.vertices[tri[0]];
    const Vec2& c1 = mesh.vertices[tri[1]];
    const Vec2& c2 = mesh.vertices[tri[2]];
    accumulate_projection(basis, kappa, ref_rule, a.x, a.y, c1.x, c1.y, c2.x, c2.y, depth, b,
                          kappa_sq, scratch);
  }
  ProjectionResult out;
  out.ortho_coeff = b;  // orthonormal basis: projection coefficients are the integrals
  out.mode_coeff = basis.to_mode_coefficients(b);
  out.l2_error = std::sqrt(std::max(0.0, kappa_sq - b.squaredNorm()));
  return out;
}
}  // namespace detail

// Projection of a smooth contrast, integrated over the true disk so that the
// basis orthonormality is respected exactly. The quadrature degree covers
// polynomial contrasts up to roughly the basis degree plus extra_degree.
inline ProjectionResult project_true(const ZernikeBasis& basis,
                                     const std::function<double(double, double)>& kappa,
                                     int extra_degree = 8) {
  if (extra_degree < 0) throw ParameterError("project_true: extra_degree must be >= 0");
  const DiskRule rule = disk_rule(2 * std::max(basis.m() - 2, 1) + extra_degree);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(basis.size());
  Eigen::VectorXd scratch;
  double kappa_sq = 0.0;
  for (size_t q = 0; q < rule.w.size(); ++q) {
    const double kv = kappa(rule.x[q], rule.y[q]);
    if (kv == 0.0) continue;
    basis.eval_all(rule.x[q], rule.y[q], scratch);
    b.noalias() += (rule.w[q] * kv) * scratch;
    kappa_sq += rule.w[q] * kv * kv;
  }
  ProjectionResult out;
  out.ortho_coeff = b;
  out.mode_coeff = basis.to_mode_coefficients(b);
  out.l2_error = std::sqrt(std::max(0.0, kappa_sq - b.squaredNorm()));
  return out;
}

// Projection of a piecewise-constant phantom contrast; cells straddling an
// inclusion boundary are subdivided before quadrature.
inline ProjectionResult project_true(const ZernikeBasis& basis, const Phantom& phantom,
                                     const TriMesh& mesh, int subdivide_depth = 5) {
  const auto kappa = [&phantom](double x, double y) { return phantom.kappa_at(x, y); };
  return detail::project_impl(basis, kappa, mesh, subdivide_depth);
}

// L^2 distance between a cellwise field and the exact phantom contrast,
// with boundary-straddling cells subdivided to the given depth.
inline double cellwise_l2_error(const TriMesh& mesh, const Eigen::VectorXd& mu,
                                const Phantom& phantom, int subdivide_depth = 5) {
  if (mu.size() != mesh.num_cells()) throw ParameterError("cellwise_l2_error: size mismatch");
  const std::vector<TriPoint> ref_rule = triangle_rule(2);
  double total = 0.0;
  const std::function<void(double, double, double, double, double, double, double, int)> accum =
      [&](double ax, double ay, double bx, double by, double cx, double cy, double mu_t,
          int depth) {
        const double vals[7] = {phantom.kappa_at(ax, ay),
                                phantom.kappa_at(bx, by),
                                phantom.kappa_at(cx, cy),
                                phantom.kappa_at(0.5 * (ax + bx), 0.5 * (ay + by)),
                                phantom.kappa_at(0.5 * (bx + cx), 0.5 * (by + cy)),
                                phantom.kappa_at(0.5 * (cx + ax), 0.5 * (cy + ay)),
                                phantom.kappa_at((ax + bx + cx) / 3.0, (ay + by + cy) / 3.0)};
        bool mixed = false;
        for (int i = 1; i < 7; ++i) mixed = mixed || (vals[i] != vals[0]);
        if (mixed && depth > 0) {
          const double abx = 0.5 * (ax + bx), aby = 0.5 * (ay + by);
          const double bcx = 0.5 * (bx + cx), bcy = 0.5 * (by + cy);
          const double cax = 0.5 * (cx + ax), cay = 0.5 * (cy + ay);
          accum(ax, ay, abx, aby, cax, cay, mu_t, depth - 1);
          accum(bx, by, bcx, bcy, abx, aby, mu_t, depth - 1);
          accum(cx, cy, cax, cay, bcx, bcy, mu_t, depth - 1);
          accum(abx, aby, bcx, bcy, cax, cay, mu_t, depth - 1);
          return;
        }
        for (const TriPoint& pt : map_rule(ref_rule, ax, ay, bx, by, cx, cy)) {
          const double d = phantom.kappa_at(pt.x, pt.y) - mu_t;
          total += pt.w * d * d;
        }
      };
  for (int t = 0; t < mesh.num_cells(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec2& a = mesh.vertices[tri[0]];
    const Vec2& b = mesh.vertices[tri[1]];
    const Vec2& c = mesh.vertices[tri[2]];
    accum(a.x, a.y, b.x, b.y, c.x, c.y, mu[t], subdivide_depth);
  }
  return std::sqrt(total);
}

// L^2 norm of the phantom contrast itself (same adaptive quadrature).
inline double phantom_l2_norm(const TriMesh& mesh, const Phantom& phantom,
                              int subdivide_depth = 5) {
  return cellwise_l2_error(mesh, Eigen::VectorXd::Zero(mesh.num_cells()), phantom,
                           subdivide_depth);
}

// Diagnostics for one reconstruction run.
struct ErrorReport {
  double l2_error = 0.0;           // |kappa_true - reconstruction| in L^2
  double projection_error = -1.0;  // |kappa_true - P kappa_true|, < 0 if skipped
  double coefficient_gap = 0.0;    // distance between clean and regularized coefficients
  double bound_value = 0.0;        // a-priori bound (L^2 surrogate for the smoothness norm)
  int m = 0;
  double delta = 0.0;
  double alpha = 0.0;
  double h = 0.0;
  double s = 0.5;  // smoothness exponent used in bound_value
};

// A-priori error bound with the smoothness norm replaced by the L^2 norm
// (surrogate; indicator contrasts have no computable smoothness norm). The
// reconstruction is piecewise constant, so the mesh term enters as h^1.
inline double error_bound_surrogate(int m, double h, double alpha, double delta,
                                    double kappa_l2, double norm_v, double s) {
  if (m < 4) throw ParameterError("error_bound_surrogate: m must be >= 4");
  if (!(alpha > 0.0)) throw ParameterError("error_bound_surrogate: alpha must be > 0");
  const double proj = std::pow((m - 2) / 2.0, -s) * kappa_l2;
  const double stab = std::sqrt(alpha * alpha + delta * delta / (alpha * alpha) +
                                (1.0 + 1.0 / (alpha * alpha)) * delta);
  return proj + (h + stab) * norm_v;
}

inline ErrorReport error_report(const TriMesh& recon_mesh, const ReconField& field,
                                const Phantom& phantom, const SpectralModel& model,
                                const MeasurementMatrix& V, const MeasurementMatrix& Vd,
                                double alpha, double h, double s = 0.5,
                                const ProjectionResult* projection = nullptr) {
  ErrorReport rep;
  rep.m = model.m;
  rep.delta = Vd.delta;
  rep.alpha = alpha;
  rep.h = h;
  rep.s = s;
  rep.l2_error = cellwise_l2_error(recon_mesh, field.mu, phantom);
  if (projection) rep.projection_error = projection->l2_error;
  const Eigen::VectorXd gamma = coeff_from_response(model, V.entries);
  const Eigen::VectorXd beta = tikhonov_coeff(model, Vd.entries, alpha);
  rep.coefficient_gap = (gamma - beta).norm();
  rep.bound_value = error_bound_surrogate(model.m, h, alpha, Vd.delta,
                                          phantom_l2_norm(recon_mesh, phantom),
                                          V.entries.norm(), s);
  return rep;
}

// L^2 distance between a cellwise field on a mesh and one on the same mesh
// refined `depth` times, using the child-index nesting of refine(): the
// children of cell t occupy indices 4t .. 4t+3.
inline double l2_diff_nested(const Eigen::VectorXd& mu_coarse, const TriMesh& fine_mesh,
                             const Eigen::VectorXd& mu_fine, int depth) {
  if (depth < 0) throw ParameterError("l2_diff_nested: depth must be >= 0");
  const int factor = 1 << (2 * depth);
  if (mu_fine.size() != fine_mesh.num_cells() || mu_fine.size() != mu_coarse.size() * factor)
    throw ParameterError("l2_diff_nested: sizes inconsistent with nesting depth");
  const CellGeometry g = cell_geometry(fine_mesh);
  double total = 0.0;
  for (int c = 0; c < fine_mesh.num_cells(); ++c) {
    const double d = mu_fine[c] - mu_coarse[c / factor];
    total += g.area[c] * d * d;
  }
  return std::sqrt(total);
}

// P-weighted norm of a cellwise field (the discrete L^2 norm).
inline double p_weighted_norm(const AreaMatrix& P, const Eigen::VectorXd& mu) {
  if (mu.size() != P.diag.size()) throw ParameterError("p_weighted_norm: size mismatch");
  return std::sqrt(mu.dot(P.diag.cwiseProduct(mu)));
}

// Spectral-model instance of the generic reconstruction algebra: treating the
// model operator itself as the sensitivity tensor over m' unit-area cells
// makes the direct solver compute exactly the closed-form regularized
// coefficients, which is how the two derivations are cross-checked.
inline SensitivityTensor model_as_tensor(const SpectralModel& model) {
  SensitivityTensor A;
  A.m = model.m;
  A.M = model.m_prime;
  A.full = model.T;
  return A;
}

inline AreaMatrix unit_area_matrix(int n) {
  AreaMatrix P;
  P.diag = Eigen::VectorXd::Ones(n);
  return P;
}

}  // namespace eit
