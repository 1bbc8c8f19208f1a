#pragma once

#include <cmath>
#include <vector>

#include "eit/errors.hpp"

namespace eit {

struct Node1D {
  double x = 0.0;
  double w = 0.0;
};

// Gauss-Legendre nodes and weights on [-1, 1].
// Newton iteration on the three-term recurrence; nodes are filled in
// symmetric pairs so the rule is exactly symmetric about 0.
inline std::vector<Node1D> gauss_legendre(int n) {
  if (n < 1) throw ParameterError("gauss_legendre: order must be >= 1");
  std::vector<Node1D> nodes(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pn = 0.0, pn1 = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pn = (n == 1) ? x : p1;
      pn1 = (n == 1) ? 1.0 : p0;  // P_{n-1}
      double dp = n * (x * pn - pn1) / (x * x - 1.0);
      double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) {
        // One clean-up iteration after convergence.
        if (std::abs(dx) == 0.0) break;
      }
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    pn1 = (n == 1) ? 1.0 : p0;
    double dp = n * (x * ((n == 1) ? x : p1) - pn1) / (x * x - 1.0);
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = {-x, w};          // cos() guess descends from +1; store ascending
    nodes[n - 1 - i] = {x, w};
  }
  if (n % 2 == 1) nodes[n / 2].x = 0.0;
  return nodes;
}

// Gauss-Legendre on [0, 1].
inline std::vector<Node1D> gauss_legendre01(int n) {
  auto nodes = gauss_legendre(n);
  for (auto& nd : nodes) {
    nd.x = 0.5 * (nd.x + 1.0);
    nd.w *= 0.5;
  }
  return nodes;
}

struct TriPoint {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
};

// Quadrature on the reference triangle {(0,0), (1,0), (0,1)}, exact for all
// polynomials of total degree <= degree. Conical product construction:
// x = u(1-v), y = v maps [0,1]^2 onto the triangle with Jacobian (1-v), so a
// polynomial of total degree d has u-degree <= d and v-degree <= d+1 after
// the substitution; tensor Gauss-Legendre of matching order is exact.
inline std::vector<TriPoint> triangle_rule(int degree) {
  if (degree < 0) throw ParameterError("triangle_rule: degree must be >= 0");
  const int nu = degree / 2 + 1;
  const int nv = (degree + 3) / 2;
  const auto gu = gauss_legendre01(nu);
  const auto gv = gauss_legendre01(nv);
  std::vector<TriPoint> pts;
  pts.reserve(static_cast<size_t>(nu) * nv);
  for (const auto& v : gv) {
    for (const auto& u : gu) {
      TriPoint p;
      p.x = u.x * (1.0 - v.x);
      p.y = v.x;
      p.w = u.w * v.w * (1.0 - v.x);
      pts.push_back(p);
    }
  }
  return pts;
}

// Map a reference-triangle rule to the physical triangle (a, b, c).
// Weights are scaled by |J| = 2*area so they sum to the triangle area.
inline std::vector<TriPoint> map_rule(const std::vector<TriPoint>& ref, double ax, double ay,
                                      double bx, double by, double cx, double cy) {
  const double j11 = bx - ax, j12 = cx - ax;
  const double j21 = by - ay, j22 = cy - ay;
  const double detj = j11 * j22 - j12 * j21;
  std::vector<TriPoint> out(ref.size());
  for (size_t i = 0; i < ref.size(); ++i) {
    out[i].x = ax + j11 * ref[i].x + j12 * ref[i].y;
    out[i].y = ay + j21 * ref[i].x + j22 * ref[i].y;
    out[i].w = ref[i].w * std::abs(detj);
  }
  return out;
}

struct DiskRule {
  std::vector<double> x, y, w;
  size_t size() const { return w.size(); }
};

// Quadrature over the closed unit disk, exact for all bivariate polynomials
// of total degree <= degree: tensor Gauss-Legendre in r (area Jacobian r
// folded into the weights) times the periodic trapezoid rule in the angle.
// The trapezoid rule integrates trig polynomials of harmonic order < n_phi
// exactly, so n_phi = 2(degree+1) leaves generous margin.
inline DiskRule disk_rule(int degree) {
  if (degree < 0) throw ParameterError("disk_rule: degree must be >= 0");
  const int nr = degree / 2 + 2;
  const int nphi = 2 * (degree + 1) + 4;
  const auto gr = gauss_legendre01(nr);
  DiskRule rule;
  rule.x.reserve(static_cast<size_t>(nr) * nphi);
  rule.y.reserve(static_cast<size_t>(nr) * nphi);
  rule.w.reserve(static_cast<size_t>(nr) * nphi);
  const double wphi = 2.0 * M_PI / nphi;
  for (const auto& r : gr) {
    for (int k = 0; k < nphi; ++k) {
      const double phi = wphi * k;
      rule.x.push_back(r.x * std::cos(phi));
      rule.y.push_back(r.x * std::sin(phi));
      rule.w.push_back(r.w * r.x * wphi);
    }
  }
  return rule;
}

}  // namespace eit
