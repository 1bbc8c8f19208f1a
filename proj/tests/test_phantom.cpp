#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "eit/errors.hpp"
#include "eit/mesh.hpp"
#include "eit/phantom.hpp"

using namespace eit;

TEST_CASE("disk inclusion membership", "[phantom]") {
  const Phantom p = single_disk_phantom();
  CHECK(p.sigma_at(0.4, 0.0) == 2.0);
  CHECK(p.sigma_at(0.58, 0.0) == 2.0);
  CHECK(p.sigma_at(0.66, 0.0) == 1.0);
  CHECK(p.sigma_at(-0.4, 0.0) == 1.0);
  CHECK(p.kappa_at(0.4, 0.0) == 1.0);
  CHECK(p.kappa_at(0.0, 0.9) == 0.0);
}

TEST_CASE("annulus and polygon membership", "[phantom]") {
  Phantom p;
  Inclusion ring;
  ring.shape = Inclusion::Shape::Annulus;
  ring.cx = 0.0;
  ring.cy = 0.0;
  ring.r_in = 0.3;
  ring.r_out = 0.5;
  ring.value = 3.0;
  p.inclusions.push_back(ring);

  Inclusion tri;
  tri.shape = Inclusion::Shape::Polygon;
  tri.vertices = {{-0.2, -0.6}, {0.2, -0.6}, {0.0, -0.2}};
  tri.value = 0.5;
  p.inclusions.push_back(tri);
  p.validate();

  CHECK(p.sigma_at(0.4, 0.0) == 3.0);
  CHECK(p.sigma_at(0.2, 0.0) == 1.0);
  CHECK(p.sigma_at(0.55, 0.0) == 1.0);
  CHECK(p.sigma_at(0.0, -0.5) == 0.5);
  CHECK(p.sigma_at(0.0, -0.1) == 1.0);
}

TEST_CASE("later inclusions shadow earlier ones", "[phantom]") {
  Phantom p;
  Inclusion big;
  big.shape = Inclusion::Shape::Disk;
  big.cx = 0.0;
  big.cy = 0.0;
  big.radius = 0.5;
  big.value = 2.0;
  Inclusion small = big;
  small.radius = 0.2;
  small.value = 5.0;
  p.inclusions = {big, small};
  p.validate();
  CHECK(p.sigma_at(0.1, 0.0) == 5.0);
  CHECK(p.sigma_at(0.4, 0.0) == 2.0);
}

TEST_CASE("validation rejects bad inclusions", "[phantom]") {
  Phantom touching;
  Inclusion d;
  d.shape = Inclusion::Shape::Disk;
  d.cx = 0.8;
  d.cy = 0.0;
  d.radius = 0.25;  // reaches past the boundary
  d.value = 2.0;
  touching.inclusions = {d};
  CHECK_THROWS_AS(touching.validate(), ParameterError);

  Phantom nonpositive;
  d.cx = 0.0;
  d.radius = 0.2;
  d.value = 0.0;
  nonpositive.inclusions = {d};
  CHECK_THROWS_AS(nonpositive.validate(), ParameterError);

  Phantom degenerate;
  Inclusion poly;
  poly.shape = Inclusion::Shape::Polygon;
  poly.vertices = {{0.0, 0.0}, {0.2, 0.0}};
  poly.value = 2.0;
  degenerate.inclusions = {poly};
  CHECK_THROWS_AS(degenerate.validate(), ParameterError);
}

TEST_CASE("json round-trip preserves the phantom", "[phantom]") {
  const std::string path = "phantom_roundtrip.json";
  const Phantom original = two_disk_phantom();
  save_phantom(original, path);
  const Phantom loaded = load_phantom(path);
  REQUIRE(loaded.inclusions.size() == original.inclusions.size());
  for (size_t i = 0; i < loaded.inclusions.size(); ++i) {
    CHECK(loaded.inclusions[i].cx == original.inclusions[i].cx);
    CHECK(loaded.inclusions[i].cy == original.inclusions[i].cy);
    CHECK(loaded.inclusions[i].radius == original.inclusions[i].radius);
    CHECK(loaded.inclusions[i].value == original.inclusions[i].value);
  }
  std::remove(path.c_str());
}

TEST_CASE("loading rejects missing or malformed files", "[phantom]") {
  CHECK_THROWS_AS(load_phantom("no_such_phantom.json"), ParameterError);

  const std::string bad_json = "phantom_bad.json";
  {
    std::ofstream out(bad_json);
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_phantom(bad_json), ParameterError);
  std::remove(bad_json.c_str());

  const std::string bad_shape = "phantom_badshape.json";
  {
    std::ofstream out(bad_shape);
    out << R"({"inclusions":[{"shape":"cube","center":[0,0],"radius":0.2,"value":2.0}]})";
  }
  CHECK_THROWS_AS(load_phantom(bad_shape), ParameterError);
  std::remove(bad_shape.c_str());
}

TEST_CASE("empty phantom means homogeneous background", "[phantom]") {
  const std::string path = "phantom_empty.json";
  {
    std::ofstream out(path);
    out << R"({"inclusions":[]})";
  }
  const Phantom p = load_phantom(path);
  CHECK(p.inclusions.empty());
  CHECK(p.sigma_at(0.3, -0.3) == 1.0);
  std::remove(path.c_str());
}

TEST_CASE("rasterized contrast marks cells by centroid", "[phantom]") {
  const TriMesh mesh = build_disk_mesh(0.05);
  const CellGeometry g = cell_geometry(mesh);
  const Phantom p = single_disk_phantom();
  const Eigen::VectorXd kappa = p.rasterize_kappa(mesh);
  REQUIRE(kappa.size() == mesh.num_cells());

  double marked_area = 0.0;
  for (int t = 0; t < mesh.num_cells(); ++t) {
    CHECK((kappa[t] == 0.0 || kappa[t] == 1.0));
    const bool inside = std::hypot(g.centroid(t, 0) - 0.4, g.centroid(t, 1)) < 0.25;
    CHECK(kappa[t] == (inside ? 1.0 : 0.0));
    if (kappa[t] == 1.0) marked_area += g.area[t];
  }
  // Raster area approximates the inclusion area.
  CHECK(std::abs(marked_area - M_PI * 0.25 * 0.25) < 0.05 * M_PI * 0.25 * 0.25);

  const Eigen::VectorXd sigma = p.rasterize_sigma(mesh);
  CHECK(((sigma.array() - 1.0) - kappa.array()).abs().maxCoeff() == 0.0);
}
