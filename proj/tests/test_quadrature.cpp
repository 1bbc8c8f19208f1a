#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "eit/errors.hpp"
#include "eit/quadrature.hpp"

using namespace eit;

namespace {

// Exact reference integral of x^a y^b over the unit triangle (0,0)-(1,0)-(0,1):
// a! b! / (a + b + 2)!.
double tri_monomial_exact(int a, int b) {
  double v = 1.0;
  for (int k = 1; k <= a; ++k) v *= k;
  for (int k = 1; k <= b; ++k) v *= k;
  for (int k = 1; k <= a + b + 2; ++k) v /= k;
  return v;
}

// Exact reference integral of x^a y^b over the unit disk via double
// factorials; zero whenever either exponent is odd.
double disk_monomial_exact(int a, int b) {
  if (a % 2 != 0 || b % 2 != 0) return 0.0;
  auto dfact = [](int n) {
    double v = 1.0;
    for (int k = n; k > 0; k -= 2) v *= k;
    return v;
  };
  return 2.0 * M_PI * dfact(a - 1) * dfact(b - 1) / dfact(a + b) / (a + b + 2);
}

}  // namespace

TEST_CASE("gauss-legendre nodes integrate polynomials exactly", "[quadrature]") {
  for (int n : {1, 2, 3, 5, 8, 16, 32}) {
    const std::vector<Node1D> rule = gauss_legendre(n);
    REQUIRE(static_cast<int>(rule.size()) == n);
    double wsum = 0.0;
    for (const Node1D& nd : rule) {
      wsum += nd.w;
      REQUIRE(std::abs(nd.x) < 1.0);
    }
    CHECK(std::abs(wsum - 2.0) < 1e-14);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double acc = 0.0;
      for (const Node1D& nd : rule) acc += nd.w * std::pow(nd.x, k);
      const double exact = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
      CHECK(std::abs(acc - exact) < 1e-13);
    }
  }
}

TEST_CASE("gauss-legendre nodes are symmetric about zero", "[quadrature]") {
  const std::vector<Node1D> rule = gauss_legendre(7);
  for (size_t i = 0; i < rule.size(); ++i) {
    const Node1D& mirror = rule[rule.size() - 1 - i];
    CHECK(std::abs(rule[i].x + mirror.x) < 1e-15);
    CHECK(std::abs(rule[i].w - mirror.w) < 1e-15);
  }
}

TEST_CASE("unit-interval rule integrates x^k", "[quadrature]") {
  const std::vector<Node1D> rule = gauss_legendre01(6);
  for (int k = 0; k <= 11; ++k) {
    double acc = 0.0;
    for (const Node1D& nd : rule) acc += nd.w * std::pow(nd.x, k);
    CHECK(std::abs(acc - 1.0 / (k + 1)) < 1e-14);
  }
}

TEST_CASE("triangle rule is exact to its stated degree", "[quadrature]") {
  for (int degree : {0, 1, 2, 5, 10, 17, 30}) {
    const std::vector<TriPoint> rule = triangle_rule(degree);
    double wsum = 0.0;
    for (const TriPoint& p : rule) wsum += p.w;
    CHECK(std::abs(wsum - 0.5) < 1e-14);
    for (int a = 0; a + 0 <= degree; ++a) {
      for (int b = 0; a + b <= degree; ++b) {
        double acc = 0.0;
        for (const TriPoint& p : rule) acc += p.w * std::pow(p.x, a) * std::pow(p.y, b);
        const double exact = tri_monomial_exact(a, b);
        CHECK(std::abs(acc - exact) <= 1e-13 * std::max(1.0, std::abs(exact)));
      }
    }
  }
}

TEST_CASE("triangle rule points lie inside the reference triangle", "[quadrature]") {
  for (const TriPoint& p : triangle_rule(12)) {
    CHECK(p.x >= 0.0);
    CHECK(p.y >= 0.0);
    CHECK(p.x + p.y <= 1.0 + 1e-15);
    CHECK(p.w > 0.0);
  }
}

TEST_CASE("mapped rule integrates affine functions over any triangle", "[quadrature]") {
  const std::vector<TriPoint> ref = triangle_rule(3);
  const double ax = 0.2, ay = -0.1, bx = 1.1, by = 0.3, cx = 0.4, cy = 0.9;
  const std::vector<TriPoint> rule = map_rule(ref, ax, ay, bx, by, cx, cy);
  const double area = 0.5 * std::abs((bx - ax) * (cy - ay) - (cx - ax) * (by - ay));
  double w = 0.0, ix = 0.0, iy = 0.0;
  for (const TriPoint& p : rule) {
    w += p.w;
    ix += p.w * p.x;
    iy += p.w * p.y;
  }
  CHECK(std::abs(w - area) < 1e-14);
  CHECK(std::abs(ix - area * (ax + bx + cx) / 3.0) < 1e-14);
  CHECK(std::abs(iy - area * (ay + by + cy) / 3.0) < 1e-14);
}

TEST_CASE("disk rule integrates monomials exactly", "[quadrature]") {
  for (int degree : {0, 2, 4, 8, 16, 30}) {
    const DiskRule rule = disk_rule(degree);
    for (int a = 0; a <= degree; ++a) {
      for (int b = 0; a + b <= degree; ++b) {
        double acc = 0.0;
        for (size_t q = 0; q < rule.w.size(); ++q)
          acc += rule.w[q] * std::pow(rule.x[q], a) * std::pow(rule.y[q], b);
        const double exact = disk_monomial_exact(a, b);
        CHECK(std::abs(acc - exact) <= 1e-12 * std::max(1.0, std::abs(exact)));
      }
    }
  }
}

TEST_CASE("disk rule total weight is the disk area", "[quadrature]") {
  const DiskRule rule = disk_rule(6);
  double w = 0.0;
  for (double wq : rule.w) w += wq;
  CHECK(std::abs(w - M_PI) < 1e-13);
}

TEST_CASE("quadrature constructors reject bad orders", "[quadrature]") {
  CHECK_THROWS_AS(gauss_legendre(0), ParameterError);
  CHECK_THROWS_AS(gauss_legendre(-3), ParameterError);
  CHECK_THROWS_AS(triangle_rule(-1), ParameterError);
  CHECK_THROWS_AS(disk_rule(-2), ParameterError);
}
