#include <catch2/catch_amalgamated.hpp>

using Catch::Approx;

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "eit/assemble.hpp"
#include "eit/errors.hpp"
#include "eit/spectral.hpp"

using namespace eit;

TEST_CASE("sensitivity row for the first pattern pair is area over pi", "[assemble]") {
  // The order-1 sine pattern has a constant unit-length gradient scaled by
  // 1/sqrt(pi), so pairing it with itself integrates 1/pi over each cell.
  const TriMesh mesh = build_disk_mesh(0.3);
  const CurrentBasis basis(4);
  const SensitivityTensor A = sensitivity(mesh, basis);
  const CellGeometry g = cell_geometry(mesh);
  const int row11 = A.row(1, 1);
  for (int t = 0; t < mesh.num_cells(); ++t)
    CHECK(A.full(row11, t) == Approx(g.area[t] / M_PI).epsilon(1e-12));
}

TEST_CASE("mixed equal-order pattern pair has an identically zero row", "[assemble]") {
  const TriMesh mesh = build_disk_mesh(0.3);
  const SensitivityTensor A = sensitivity(mesh, CurrentBasis(4));
  CHECK(A.full.row(A.row(1, 2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(A.full.row(A.row(2, 1)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(A.full.row(A.row(3, 4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("diagonal sensitivity rows sum to the homogeneous response", "[assemble]") {
  const int m = 8;
  const TriMesh mesh = build_disk_mesh(0.02);
  const SensitivityTensor A = sensitivity(mesh, CurrentBasis(m));
  for (int k = 1; k <= m; ++k) {
    const double total = A.full.row(A.row(k, k)).sum();
    CHECK(std::abs(total - 1.0 / trig_order(k)) < 1e-3);
  }
}

TEST_CASE("sensitivity tensor is symmetric across the pattern pair", "[assemble]") {
  const TriMesh mesh = build_disk_mesh(0.25);
  const SensitivityTensor A = sensitivity(mesh, CurrentBasis(6));
  for (int k = 1; k <= 6; ++k)
    for (int l = 1; l <= 6; ++l)
      CHECK((A.full.row(A.row(k, l)) - A.full.row(A.row(l, k))).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("compressed view reproduces the normal matrix", "[assemble]") {
  const TriMesh mesh = build_disk_mesh(0.35);
  const SensitivityTensor A = sensitivity(mesh, CurrentBasis(4));
  const CompressedSensitivity C = compressed_view(A);
  REQUIRE(C.rows.rows() == 4 * 5 / 2);
  const Eigen::MatrixXd full_normal = A.full.transpose() * A.full;
  const Eigen::MatrixXd via_compressed =
      C.rows.transpose() * C.weight.asDiagonal() * C.rows;
  CHECK((full_normal - via_compressed).cwiseAbs().maxCoeff() <=
        1e-12 * full_normal.cwiseAbs().maxCoeff());
}

TEST_CASE("compressed pair vector carries the frobenius norm", "[assemble]") {
  Eigen::MatrixXd V(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) V(i, j) = V(j, i) = 0.3 * i - 0.7 * j + 0.1;
  const Eigen::VectorXd vc = vec_pairs(V);
  const CompressedSensitivity C = compressed_view(sensitivity(build_disk_mesh(0.5), CurrentBasis(4)));
  REQUIRE(vc.size() == C.weight.size());
  CHECK(vc.dot(C.weight.cwiseProduct(vc)) == Approx(V.squaredNorm()).epsilon(1e-14));
}

TEST_CASE("applying the tensor matches exact quadrature for smooth contrast", "[assemble]") {
  // Cellwise rasterization at centroids is second-order accurate for a linear
  // contrast, so the two routes agree to O(h^2).
  const TriMesh mesh = build_disk_mesh(0.05);
  const CellGeometry g = cell_geometry(mesh);
  const SensitivityTensor A = sensitivity(mesh, CurrentBasis(4));
  Eigen::VectorXd kappa(mesh.num_cells());
  for (int t = 0; t < mesh.num_cells(); ++t) kappa[t] = 0.5 + 0.3 * g.centroid(t, 0);

  const MeasurementMatrix via_tensor = apply_S(A, kappa);
  const Eigen::MatrixXd exact =
      apply_sensitivity(4, [](double x, double) { return 0.5 + 0.3 * x; }, 1);
  CHECK((via_tensor.entries - exact).cwiseAbs().maxCoeff() <=
        0.02 * exact.cwiseAbs().maxCoeff());
  CHECK(via_tensor.role == MeasurementMatrix::Role::V);
}

TEST_CASE("area matrix holds positive cell areas", "[assemble]") {
  const TriMesh mesh = build_disk_mesh(0.3);
  const AreaMatrix P = area_matrix(mesh);
  REQUIRE(P.diag.size() == mesh.num_cells());
  CHECK(P.diag.minCoeff() > 0.0);
  CHECK(P.diag.sum() == Approx(boundary_polygon_area(mesh)).epsilon(1e-13));
}

TEST_CASE("sensitivity cache round-trips and is keyed to its inputs", "[assemble]") {
  const TriMesh mesh = build_disk_mesh(0.35);
  const SensitivityTensor A = sensitivity(mesh, CurrentBasis(4));
  const std::uint64_t key = mesh_hash(mesh);
  const std::string path = "sensitivity_cache.bin";
  save_sensitivity(A, key, path);

  const SensitivityTensor B = load_sensitivity(path, 4, key);
  REQUIRE(B.m == A.m);
  REQUIRE(B.M == A.M);
  CHECK(std::memcmp(A.full.data(), B.full.data(), sizeof(double) * A.full.size()) == 0);

  CHECK_THROWS_AS(load_sensitivity(path, 6, key), ParameterError);
  CHECK_THROWS_AS(load_sensitivity(path, 4, key + 1), ParameterError);
  CHECK_THROWS_AS(load_sensitivity("no_such_cache.bin", 4, key), ParameterError);

  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("BADMAGIC", 8);
  }
  CHECK_THROWS_AS(load_sensitivity(path, 4, key), ParameterError);
  std::remove(path.c_str());
}
