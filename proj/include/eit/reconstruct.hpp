#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eit/assemble.hpp"
#include "eit/errors.hpp"
#include "eit/forward.hpp"
#include "eit/mesh.hpp"
#include "eit/spectral.hpp"

namespace eit {

// Regularization setup. With source Rule the parameter is recomputed from
// (m, delta) at solve time rather than read from the stored alpha, so a stale
// value can never leak in.
struct RegConfig {
  enum class Source { Explicit, Rule };
  double alpha = 0.0;
  double delta = 0.0;
  Source source = Source::Explicit;

  static RegConfig explicit_alpha(double alpha, double delta = 0.0) {
    RegConfig cfg;
    cfg.alpha = alpha;
    cfg.delta = delta;
    cfg.source = Source::Explicit;
    return cfg;
  }
  static RegConfig from_rule(double delta) {
    RegConfig cfg;
    cfg.delta = delta;
    cfg.source = Source::Rule;
    return cfg;
  }

  double resolve_alpha(int m) const {
    return source == Source::Rule ? alpha_rule(m, delta) : alpha;
  }
};

// Piecewise-constant reconstruction over the cells of a mesh.
struct ReconField {
  const TriMesh* mesh = nullptr;  // partition the coefficients live on
  Eigen::VectorXd mu;
};

namespace detail {
inline double checked_alpha(const RegConfig& cfg, int m) {
  const double alpha = cfg.resolve_alpha(m);
  if (!(alpha > 0.0))
    throw ParameterError("reconstruction: alpha must be > 0 (the normal matrix is rank-deficient)");
  return alpha;
}

inline void check_recon_inputs(const SensitivityTensor& A, const AreaMatrix& P,
                               const MeasurementMatrix& Vd) {
  if (Vd.m != A.m) throw ParameterError("reconstruction: measurement size does not match tensor");
  if (P.diag.size() != A.M) throw ParameterError("reconstruction: area matrix does not match tensor");
}

inline void check_finite(const Eigen::VectorXd& mu) {
  if (!mu.allFinite()) throw NumericalError("reconstruction: non-finite coefficients");
}
}  // namespace detail

// One-shot solve of the normal equations (A^T A + alpha P) mu = A^T vec(V).
// Dense SPD factorization, O(M^3); intended for modest cell counts.
inline ReconField direct_solve(const SensitivityTensor& A, const AreaMatrix& P,
                               const MeasurementMatrix& Vd, const RegConfig& cfg) {
  detail::check_recon_inputs(A, P, Vd);
  const double alpha = detail::checked_alpha(cfg, A.m);
  const Eigen::VectorXd v = vec_response(Vd.entries);
  Eigen::MatrixXd B = A.full.transpose() * A.full;
  B.diagonal() += alpha * P.diag;
  const Eigen::VectorXd rhs = A.full.transpose() * v;
  Eigen::LLT<Eigen::MatrixXd> llt(B);
  if (llt.info() != Eigen::Success) throw NumericalError("direct_solve: factorization failed");
  ReconField field;
  field.mu = llt.solve(rhs);
  detail::check_finite(field.mu);
  const double rhs_norm = rhs.norm();
  const double res = (B * field.mu - rhs).norm();
  if (res > 1e-10 * std::max(rhs_norm, 1e-300))
    throw NumericalError("direct_solve: residual above tolerance");
  return field;
}

// Equivalent small-system solve through the pair-space identity
//   mu = P^{-1} A^T (A P^{-1} A^T + alpha I)^{-1} vec(V),
// realized on the deduplicated pair rows with multiplicity weights. Cost
// O(n_pairs^2 M) instead of O(M^3); the default when M is large.
inline ReconField dual_solve(const SensitivityTensor& A, const AreaMatrix& P,
                             const MeasurementMatrix& Vd, const RegConfig& cfg) {
  detail::check_recon_inputs(A, P, Vd);
  const double alpha = detail::checked_alpha(cfg, A.m);
  const CompressedSensitivity C = compressed_view(A);
  const Eigen::VectorXd inv_p = P.diag.cwiseInverse();
  const Eigen::VectorXd sqrt_w = C.weight.cwiseSqrt();
  const Eigen::VectorXd vc = vec_pairs(Vd.entries);

  // K = W^{1/2} (C P^{-1} C^T) W^{1/2} + alpha I, SPD of pair-space size.
  Eigen::MatrixXd K = C.rows * inv_p.asDiagonal() * C.rows.transpose();
  K = sqrt_w.asDiagonal() * K * sqrt_w.asDiagonal();
  K.diagonal().array() += alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) throw NumericalError("dual_solve: factorization failed");
  const Eigen::VectorXd y = llt.solve(sqrt_w.asDiagonal() * vc);

  ReconField field;
  field.mu = inv_p.asDiagonal() * (C.rows.transpose() * (sqrt_w.asDiagonal() * y));
  detail::check_finite(field.mu);

  // Verify against the primal optimality system.
  const Eigen::VectorXd rhs = C.rows.transpose() * (C.weight.asDiagonal() * vc);
  const Eigen::VectorXd lhs = C.rows.transpose() * (C.weight.asDiagonal() * (C.rows * field.mu)) +
                              alpha * P.diag.cwiseProduct(field.mu);
  if ((lhs - rhs).norm() > 1e-8 * std::max(rhs.norm(), 1e-300))
    throw NumericalError("dual_solve: primal residual above tolerance");
  return field;
}

struct IterativeResult {
  ReconField field;
  int iterations = 0;
  std::vector<double> objective;  // misfit + penalty after each iteration
  bool converged = false;
};

// Conjugate gradients on the same SPD normal system, from a zero start. The
// objective trace records |V - S(mu)|_F^2 + alpha mu^T P mu per iteration.
inline IterativeResult iterative_baseline(const SensitivityTensor& A, const AreaMatrix& P,
                                          const MeasurementMatrix& Vd, const RegConfig& cfg,
                                          int max_iters, double tol) {
  detail::check_recon_inputs(A, P, Vd);
  if (max_iters < 1) throw ParameterError("iterative_baseline: max_iters must be >= 1");
  if (!(tol > 0.0)) throw ParameterError("iterative_baseline: tol must be > 0");
  const double alpha = detail::checked_alpha(cfg, A.m);
  const CompressedSensitivity C = compressed_view(A);
  const Eigen::VectorXd vc = vec_pairs(Vd.entries);

  const auto apply_B = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return C.rows.transpose() * (C.weight.asDiagonal() * (C.rows * x)) +
           alpha * P.diag.cwiseProduct(x);
  };
  const auto objective = [&](const Eigen::VectorXd& x) -> double {
    const Eigen::VectorXd resid = vc - C.rows * x;
    return resid.dot(C.weight.asDiagonal() * resid) + alpha * x.dot(P.diag.cwiseProduct(x));
  };

  const Eigen::VectorXd rhs = C.rows.transpose() * (C.weight.asDiagonal() * vc);
  const double rhs_norm = rhs.norm();

  IterativeResult out;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(A.M);
  out.objective.push_back(objective(x));
  if (rhs_norm == 0.0) {
    out.field.mu = x;
    out.converged = true;
    return out;
  }

  Eigen::VectorXd r = rhs;  // residual of B x = rhs at x = 0
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd Bp = apply_B(p);
    const double pBp = p.dot(Bp);
    if (!(pBp > 0.0)) throw NumericalError("iterative_baseline: curvature lost (system not SPD?)");
    const double step = rr / pBp;
    x += step * p;
    r -= step * Bp;
    out.iterations = it + 1;
    out.objective.push_back(objective(x));
    const double rr_new = r.squaredNorm();
    if (std::sqrt(rr_new) <= tol * rhs_norm) {
      out.converged = true;
      break;
    }
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  out.field.mu = x;
  detail::check_finite(out.field.mu);
  return out;
}

// Default dispatch: the pair-space path once it is cheaper than the dense
// normal equations.
inline ReconField reconstruct(const SensitivityTensor& A, const AreaMatrix& P,
                              const MeasurementMatrix& Vd, const RegConfig& cfg) {
  return (A.M > A.m * A.m) ? dual_solve(A, P, Vd, cfg) : direct_solve(A, P, Vd, cfg);
}

// CSV export: one row per cell with its centroid, area, and coefficient.
inline void write_recon_csv(const TriMesh& mesh, const ReconField& field, const std::string& path) {
  if (field.mu.size() != mesh.num_cells())
    throw ParameterError("write_recon_csv: field does not match mesh");
  const CellGeometry g = cell_geometry(mesh);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("write_recon_csv: cannot open " + path);
  out << "# schema=recon/v1\n";
  out << "cell_index,centroid_x,centroid_y,area,mu\n";
  char buf[160];
  for (int t = 0; t < mesh.num_cells(); ++t) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", t, g.centroid(t, 0),
                  g.centroid(t, 1), g.area[t], field.mu[t]);
    out << buf;
  }
  if (!out) throw NumericalError("write_recon_csv: write failed for " + path);
}

// Grayscale raster of the field: 512x512 binary PGM, pixels sampled at their
// centers, outside the disk mapped to 0, values linearly ramped between the
// recorded minimum and maximum.
inline void write_recon_pgm(const TriMesh& mesh, const ReconField& field, const std::string& path,
                            int size = 512) {
  if (field.mu.size() != mesh.num_cells())
    throw ParameterError("write_recon_pgm: field does not match mesh");
  if (size < 1) throw ParameterError("write_recon_pgm: size must be >= 1");
  const PointLocator locator(mesh);
  const double mu_min = field.mu.size() ? field.mu.minCoeff() : 0.0;
  const double mu_max = field.mu.size() ? field.mu.maxCoeff() : 0.0;
  const double range = mu_max - mu_min;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("write_recon_pgm: cannot open " + path);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "P5\n# mu_min=%.17g mu_max=%.17g\n%d %d\n255\n", mu_min, mu_max,
                size, size);
  out << buf;
  std::vector<unsigned char> row(size);
  for (int py = 0; py < size; ++py) {
    const double y = 1.0 - (py + 0.5) * 2.0 / size;
    for (int px = 0; px < size; ++px) {
      const double x = -1.0 + (px + 0.5) * 2.0 / size;
      unsigned char gray = 0;
      if (x * x + y * y <= 1.0) {
        const int cell = locator.locate(x, y);
        if (cell >= 0 && range > 0.0) {
          const double v = (field.mu[cell] - mu_min) / range;
          gray = static_cast<unsigned char>(std::lround(255.0 * std::min(std::max(v, 0.0), 1.0)));
        }
      }
      row[px] = gray;
    }
    out.write(reinterpret_cast<const char*>(row.data()), size);
  }
  if (!out) throw NumericalError("write_recon_pgm: write failed for " + path);
}

}  // namespace eit
