#include <catch2/catch_amalgamated.hpp>

using Catch::Approx;

#include <cmath>
#include <random>

#include "eit/analysis.hpp"
#include "eit/errors.hpp"
#include "eit/experiment.hpp"

using namespace eit;

TEST_CASE("disk polynomials are orthonormal", "[analysis]") {
  const ZernikeBasis basis(8);
  REQUIRE(basis.size() == 16);
  const DiskRule rule = disk_rule(2 * (8 - 2) + 2);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(basis.size(), basis.size());
  Eigen::VectorXd vals;
  for (size_t q = 0; q < rule.w.size(); ++q) {
    basis.eval_all(rule.x[q], rule.y[q], vals);
    G.noalias() += rule.w[q] * (vals * vals.transpose());
  }
  for (int i = 0; i < G.rows(); ++i)
    for (int j = 0; j < G.cols(); ++j)
      CHECK(std::abs(G(i, j) - (i == j ? 1.0 : 0.0)) < 1e-12);
}

TEST_CASE("disk polynomial frozen values", "[analysis]") {
  const ZernikeBasis basis(8);
  auto value_of = [&](int radial, int angular, bool sine, double x, double y) {
    Eigen::VectorXd vals;
    basis.eval_all(x, y, vals);
    const auto& modes = basis.modes();
    for (int k = 0; k < basis.size(); ++k) {
      if (modes[k].radial_degree == radial && modes[k].angular_order == angular &&
          modes[k].sine_type == sine)
        return vals[k];
    }
    throw std::logic_error("mode not found");
  };
  CHECK(value_of(2, 0, false, 0.3, 0.0) == Approx(-0.8013081195207887).epsilon(1e-13));
  CHECK(value_of(1, 1, false, 0.3, 0.4) == Approx(0.33851375012865376).epsilon(1e-13));
  CHECK(value_of(3, 1, true, 0.3, 0.4) == Approx(-0.7978845608028654).epsilon(1e-13));
  CHECK(value_of(4, 0, false, 0.5, 0.0) == Approx(-0.15769578262626002).epsilon(1e-13));
}

TEST_CASE("orthonormal coefficients convert exactly to mode coefficients", "[analysis]") {
  for (int m : {8, 16}) {
    const ZernikeBasis basis(m);
    const SpectralModel model = build_spectral_model(m);
    std::mt19937 rng(41);
    std::normal_distribution<double> N(0.0, 1.0);
    Eigen::VectorXd c(basis.size());
    for (int k = 0; k < c.size(); ++k) c[k] = N(rng);
    const Eigen::VectorXd b = basis.to_mode_coefficients(c);

    std::uniform_real_distribution<double> U(-0.7, 0.7);
    for (int t = 0; t < 60; ++t) {
      const double x = U(rng), y = U(rng);
      if (x * x + y * y >= 1.0) continue;
      const double via_ortho = basis.eval_sum(c, x, y);
      const double via_modes = model.kappa_eval(b, x, y);
      CHECK(std::abs(via_ortho - via_modes) < 1e-10 * (1.0 + std::abs(via_ortho)));
    }
  }
}

TEST_CASE("projection closes on contrasts inside the span", "[analysis]") {
  const ZernikeBasis basis(8);
  const ProjectionResult constant = project_true(basis, [](double, double) { return 1.0; });
  CHECK(constant.l2_error < 1e-6);
  const ProjectionResult linear = project_true(basis, [](double, double y) { return y; });
  CHECK(linear.l2_error < 1e-6);
  // Recovered coefficients reproduce the function.
  CHECK(basis.eval_sum(linear.ortho_coeff, 0.2, 0.5) == Approx(0.5).margin(1e-10));
  CHECK(basis.eval_sum(constant.ortho_coeff, -0.3, 0.1) == Approx(1.0).margin(1e-10));
}

TEST_CASE("indicator projection error decreases with resolution", "[analysis]") {
  const TriMesh mesh = build_disk_mesh(0.1);
  const Phantom phantom = single_disk_phantom();
  double prev = std::numeric_limits<double>::infinity();
  for (int m : {8, 16, 32}) {
    const ZernikeBasis basis(m);
    const ProjectionResult proj = project_true(basis, phantom, mesh);
    CHECK(proj.l2_error < prev);
    prev = proj.l2_error;
  }
}

TEST_CASE("phantom norm matches the closed form", "[analysis]") {
  const TriMesh mesh = build_disk_mesh(0.1);
  const double exact = 0.44311346272637897;  // sqrt(pi) / 4 for a radius-1/4 unit jump
  CHECK(std::abs(phantom_l2_norm(mesh, single_disk_phantom()) - exact) < 1e-3 * exact);
}

TEST_CASE("cellwise error vanishes for the phantom's own raster limit", "[analysis]") {
  const TriMesh mesh = build_disk_mesh(0.05);
  const Phantom phantom = single_disk_phantom();
  const Eigen::VectorXd raster = phantom.rasterize_kappa(mesh);
  const double raster_err = cellwise_l2_error(mesh, raster, phantom);
  const double zero_err = cellwise_l2_error(mesh, Eigen::VectorXd::Zero(mesh.num_cells()),
                                            phantom);
  CHECK(raster_err < 0.5 * zero_err);
  CHECK(raster_err > 0.0);  // boundary cells cannot be matched by a raster
  CHECK_THROWS_AS(cellwise_l2_error(mesh, Eigen::VectorXd::Zero(3), phantom), ParameterError);
}

TEST_CASE("nested field distance is exact for nested data", "[analysis]") {
  const TriMesh coarse = build_disk_mesh(0.4);
  const TriMesh fine = refine(coarse);
  Eigen::VectorXd mu_c(coarse.num_cells());
  for (int t = 0; t < mu_c.size(); ++t) mu_c[t] = 0.1 * t;
  Eigen::VectorXd mu_f(fine.num_cells());
  for (int c = 0; c < mu_f.size(); ++c) mu_f[c] = mu_c[c / 4];
  CHECK(l2_diff_nested(mu_c, fine, mu_f, 1) == 0.0);

  // Perturb the four children of cell 0 and compare with the direct formula.
  const CellGeometry g = cell_geometry(fine);
  double expected_sq = 0.0;
  for (int c = 0; c < 4; ++c) {
    const double s = 0.01 * (c + 1);
    mu_f[c] += s;
    expected_sq += g.area[c] * s * s;
  }
  CHECK(l2_diff_nested(mu_c, fine, mu_f, 1) == Approx(std::sqrt(expected_sq)).epsilon(1e-13));

  const TriMesh finer = refine(fine);
  Eigen::VectorXd mu_ff(finer.num_cells());
  for (int c = 0; c < mu_ff.size(); ++c) mu_ff[c] = mu_c[c / 16];
  CHECK(l2_diff_nested(mu_c, finer, mu_ff, 2) == 0.0);
  CHECK_THROWS_AS(l2_diff_nested(mu_c, finer, mu_ff, 1), ParameterError);
}

TEST_CASE("error bound surrogate frozen value and guards", "[analysis]") {
  CHECK(error_bound_surrogate(8, 0.1, 0.01, 0.01, 1.0, 2.0, 0.5) ==
        Approx(20.878106473870087).epsilon(1e-13));
  CHECK_THROWS_AS(error_bound_surrogate(8, 0.1, 0.0, 0.01, 1.0, 2.0, 0.5), ParameterError);
  CHECK_THROWS_AS(error_bound_surrogate(2, 0.1, 0.01, 0.01, 1.0, 2.0, 0.5), ParameterError);
}

TEST_CASE("run report carries the pipeline quantities", "[analysis]") {
  const TriMesh mesh = build_disk_mesh(0.2);
  const CurrentBasis basis(4);
  const Phantom phantom = single_disk_phantom();
  const MeasurementMatrix V = synthesize_V(phantom, basis, refine(mesh));
  const MeasurementMatrix Vd = add_noise(V, 0.02, 3);
  const SensitivityTensor A = sensitivity(mesh, basis);
  const AreaMatrix P = area_matrix(mesh);
  const double alpha = 1e-2;
  const ReconField field = direct_solve(A, P, Vd, RegConfig::explicit_alpha(alpha, 0.02));
  const SpectralModel model = build_spectral_model(4);

  const ErrorReport rep = error_report(mesh, field, phantom, model, V, Vd, alpha, 0.2);
  CHECK(rep.m == 4);
  CHECK(rep.delta == 0.02);
  CHECK(rep.alpha == alpha);
  CHECK(rep.l2_error > 0.0);
  CHECK(rep.coefficient_gap > 0.0);
  CHECK(rep.bound_value > 0.0);
  CHECK(rep.projection_error == -1.0);

  const ZernikeBasis zbasis(4);
  const ProjectionResult proj = project_true(zbasis, phantom, mesh);
  const ErrorReport with_proj =
      error_report(mesh, field, phantom, model, V, Vd, alpha, 0.2, 0.5, &proj);
  CHECK(with_proj.projection_error == proj.l2_error);
  // The coefficient gap is the distance between the unregularized clean
  // coefficients and the regularized noisy ones.
  const Eigen::VectorXd gamma = coeff_from_response(model, V.entries);
  const Eigen::VectorXd beta = tikhonov_coeff(model, Vd.entries, alpha);
  CHECK(rep.coefficient_gap == Approx((gamma - beta).norm()).epsilon(1e-14));
}

TEST_CASE("model-as-operator solve equals the closed-form coefficients", "[analysis]") {
  const SpectralModel model = build_spectral_model(4);
  const SensitivityTensor A = model_as_tensor(model);
  const AreaMatrix P = unit_area_matrix(model.m_prime);
  MeasurementMatrix Vd;
  Vd.m = 4;
  Vd.role = MeasurementMatrix::Role::VDelta;
  Vd.entries = Eigen::MatrixXd(4, 4);
  std::mt19937 rng(47);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) Vd.entries(i, j) = Vd.entries(j, i) = N(rng);

  const double alpha = 1e-2;
  const ReconField mu = direct_solve(A, P, Vd, RegConfig::explicit_alpha(alpha));
  const Eigen::VectorXd beta = tikhonov_coeff(model, Vd.entries, alpha);
  CHECK((mu.mu - beta).norm() <= 1e-10 * beta.norm());
}

TEST_CASE("support summary finds components and centroid", "[analysis]") {
  const TriMesh mesh = build_disk_mesh(0.4);
  const auto nb = cell_neighbors(mesh);
  const CellGeometry g = cell_geometry(mesh);

  Eigen::VectorXd mu = Eigen::VectorXd::Constant(mesh.num_cells(), 0.2);
  int partner = -1;
  for (int e = 0; e < 3 && partner < 0; ++e) partner = nb[0][e];
  REQUIRE(partner >= 0);
  mu[0] = 1.0;
  mu[partner] = -1.0;  // magnitude counts, sign does not
  SupportSummary sup = support_summary(mesh, mu);
  CHECK(sup.threshold == 0.5);
  CHECK(sup.cells == 2);
  CHECK(sup.components == 1);
  const double expected_cx = (g.area[0] * g.centroid(0, 0) + g.area[partner] * g.centroid(partner, 0)) /
                             (g.area[0] + g.area[partner]);
  CHECK(sup.centroid_x == Approx(expected_cx).epsilon(1e-14));

  // A second blob far away adds a component.
  int far = -1;
  for (int t = 0; t < mesh.num_cells(); ++t)
    if (g.centroid(t, 0) < -0.5) far = t;
  REQUIRE(far >= 0);
  mu[far] = 1.0;
  CHECK(support_summary(mesh, mu).components == 2);

  CHECK(support_summary(mesh, Eigen::VectorXd::Zero(mesh.num_cells())).components == 0);
}
