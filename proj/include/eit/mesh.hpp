#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eit/errors.hpp"

namespace eit {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Conforming triangulation of the unit disk. Triangles are counterclockwise;
// boundary_edges traverse the outer loop counterclockwise and every boundary
// vertex lies on the unit circle to within 1e-12.
struct TriMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 2>> boundary_edges;
  double h = 0.0;  // target mesh size the mesh was built for

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_cells() const { return static_cast<int>(triangles.size()); }
};

// Per-cell areas and centroids.
struct CellGeometry {
  Eigen::VectorXd area;
  Eigen::MatrixX2d centroid;
};

namespace detail {
inline double tri_signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}
}  // namespace detail

// Structured polar-sector triangulation of the unit disk.
//
// R = round(1/h) concentric rings; ring i carries 6i equally spaced vertices
// at radius i/R, so radial and tangential edge lengths are both ~1/R and the
// family is quasi-uniform by construction. Cell count is 6R^2 = Theta(h^-2).
// Deterministic: the mesh is a pure function of h.
inline TriMesh build_disk_mesh(double h) {
  if (!(h > 0.0) || !(h < 1.0)) throw ParameterError("build_disk_mesh: require 0 < h < 1");
  const int R = std::max(1, static_cast<int>(std::lround(1.0 / h)));

  TriMesh mesh;
  mesh.h = h;
  mesh.vertices.push_back({0.0, 0.0});
  // ring_start[i] = index of the first vertex of ring i (1-based rings).
  std::vector<int> ring_start(R + 1, 0);
  for (int i = 1; i <= R; ++i) {
    ring_start[i] = static_cast<int>(mesh.vertices.size());
    const double r = static_cast<double>(i) / R;
    const int n = 6 * i;
    for (int k = 0; k < n; ++k) {
      const double phi = 2.0 * M_PI * k / n;
      mesh.vertices.push_back({r * std::cos(phi), r * std::sin(phi)});
    }
  }

  // Kernel: fan of 6 triangles around the center.
  for (int k = 0; k < 6; ++k) {
    mesh.triangles.push_back({0, ring_start[1] + k, ring_start[1] + (k + 1) % 6});
  }
  // Annulus between ring i-1 and ring i, sector by sector. In sector s the
  // outer arc has i+1 vertices and the inner arc has i; interleaving them
  // gives 2i-1 triangles per sector.
  for (int i = 2; i <= R; ++i) {
    const int n_out = 6 * i;
    const int n_in = 6 * (i - 1);
    for (int s = 0; s < 6; ++s) {
      const auto outer = [&](int j) { return ring_start[i] + (s * i + j) % n_out; };
      const auto inner = [&](int j) { return ring_start[i - 1] + (s * (i - 1) + j) % n_in; };
      for (int j = 0; j < i; ++j) {
        mesh.triangles.push_back({outer(j), outer(j + 1), inner(j)});
      }
      for (int j = 0; j + 1 < i; ++j) {
        mesh.triangles.push_back({outer(j + 1), inner(j + 1), inner(j)});
      }
    }
  }

  const int nb = 6 * R;
  for (int k = 0; k < nb; ++k) {
    mesh.boundary_edges.push_back({ring_start[R] + k, ring_start[R] + (k + 1) % nb});
  }
  return mesh;
}

// Uniform refinement: every triangle splits into four via edge midpoints.
// Parent vertices keep their indices; midpoints of boundary edges are snapped
// back onto the unit circle. Children of triangle t are emitted at 4t..4t+3.
inline TriMesh refine(const TriMesh& mesh) {
  TriMesh out;
  out.h = mesh.h / 2.0;
  out.vertices = mesh.vertices;

  std::map<std::pair<int, int>, int> midpoint;
  std::map<std::pair<int, int>, bool> is_boundary;
  for (const auto& e : mesh.boundary_edges) {
    is_boundary[{std::min(e[0], e[1]), std::max(e[0], e[1])}] = true;
  }
  auto mid = [&](int a, int b) {
    const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    Vec2 p{0.5 * (mesh.vertices[a].x + mesh.vertices[b].x),
           0.5 * (mesh.vertices[a].y + mesh.vertices[b].y)};
    if (is_boundary.count(key)) {
      const double r = std::hypot(p.x, p.y);
      p.x /= r;
      p.y /= r;
    }
    const int idx = static_cast<int>(out.vertices.size());
    out.vertices.push_back(p);
    midpoint.emplace(key, idx);
    return idx;
  };

  out.triangles.reserve(mesh.triangles.size() * 4);
  for (const auto& t : mesh.triangles) {
    const int a = t[0], b = t[1], c = t[2];
    const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    out.triangles.push_back({a, ab, ca});
    out.triangles.push_back({b, bc, ab});
    out.triangles.push_back({c, ca, bc});
    out.triangles.push_back({ab, bc, ca});
  }
  out.boundary_edges.reserve(mesh.boundary_edges.size() * 2);
  for (const auto& e : mesh.boundary_edges) {
    const int m01 = mid(e[0], e[1]);
    out.boundary_edges.push_back({e[0], m01});
    out.boundary_edges.push_back({m01, e[1]});
  }
  return out;
}

// Areas (strictly positive) and centroids of all cells.
inline CellGeometry cell_geometry(const TriMesh& mesh) {
  const int M = mesh.num_cells();
  CellGeometry g;
  g.area.resize(M);
  g.centroid.resize(M, 2);
  for (int t = 0; t < M; ++t) {
    const Vec2& a = mesh.vertices[mesh.triangles[t][0]];
    const Vec2& b = mesh.vertices[mesh.triangles[t][1]];
    const Vec2& c = mesh.vertices[mesh.triangles[t][2]];
    const double area = detail::tri_signed_area(a, b, c);
    if (!(area > 0.0)) throw ParameterError("cell_geometry: non-positive cell area (bad orientation?)");
    g.area[t] = area;
    g.centroid(t, 0) = (a.x + b.x + c.x) / 3.0;
    g.centroid(t, 1) = (a.y + b.y + c.y) / 3.0;
  }
  return g;
}

// Longest edge per cell.
inline Eigen::VectorXd cell_diameters(const TriMesh& mesh) {
  Eigen::VectorXd d(mesh.num_cells());
  for (int t = 0; t < mesh.num_cells(); ++t) {
    const Vec2& a = mesh.vertices[mesh.triangles[t][0]];
    const Vec2& b = mesh.vertices[mesh.triangles[t][1]];
    const Vec2& c = mesh.vertices[mesh.triangles[t][2]];
    d[t] = std::max({std::hypot(b.x - a.x, b.y - a.y), std::hypot(c.x - b.x, c.y - b.y),
                     std::hypot(a.x - c.x, a.y - c.y)});
  }
  return d;
}

// Edge-sharing neighbors of each cell (-1 where there is none, i.e. along
// the boundary). Deterministic ordering by local edge (0-1, 1-2, 2-0).
inline std::vector<std::array<int, 3>> cell_neighbors(const TriMesh& mesh) {
  std::map<std::pair<int, int>, std::pair<int, int>> edge_owner;  // edge -> (cell, slot)
  std::vector<std::array<int, 3>> nb(mesh.num_cells(), {-1, -1, -1});
  for (int t = 0; t < mesh.num_cells(); ++t) {
    for (int e = 0; e < 3; ++e) {
      const int a = mesh.triangles[t][e];
      const int b = mesh.triangles[t][(e + 1) % 3];
      const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
      auto it = edge_owner.find(key);
      if (it == edge_owner.end()) {
        edge_owner.emplace(key, std::make_pair(t, e));
      } else {
        nb[t][e] = it->second.first;
        nb[it->second.first][it->second.second] = t;
      }
    }
  }
  return nb;
}

// Shoelace area of the boundary loop (the polygonal hull the mesh covers).
inline double boundary_polygon_area(const TriMesh& mesh) {
  double sum = 0.0;
  for (const auto& e : mesh.boundary_edges) {
    const Vec2& a = mesh.vertices[e[0]];
    const Vec2& b = mesh.vertices[e[1]];
    sum += a.x * b.y - b.x * a.y;
  }
  return 0.5 * sum;
}

// FNV-1a over the raw vertex coordinates and connectivity; used to key
// sensitivity caches to a specific mesh.
inline std::uint64_t mesh_hash(const TriMesh& mesh) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix_bytes = [&h](const void* p, size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& v : mesh.vertices) {
    mix_bytes(&v.x, sizeof(double));
    mix_bytes(&v.y, sizeof(double));
  }
  for (const auto& t : mesh.triangles) mix_bytes(t.data(), sizeof(int) * 3);
  for (const auto& e : mesh.boundary_edges) mix_bytes(e.data(), sizeof(int) * 2);
  return h;
}

// Sectioned CSV export: vertex coordinates, triangle connectivity, boundary
// edge list.
inline void write_mesh_csv(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("write_mesh_csv: cannot open " + path);
  char buf[96];
  out << "# schema=mesh/v1\n";
  std::snprintf(buf, sizeof(buf), "# h=%.17g\n", mesh.h);
  out << buf;
  out << "#vertices x,y\n";
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", v.x, v.y);
    out << buf;
  }
  out << "#triangles i,j,k\n";
  for (const auto& t : mesh.triangles) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%d\n", t[0], t[1], t[2]);
    out << buf;
  }
  out << "#boundary i,j\n";
  for (const auto& e : mesh.boundary_edges) {
    std::snprintf(buf, sizeof(buf), "%d,%d\n", e[0], e[1]);
    out << buf;
  }
  if (!out) throw NumericalError("write_mesh_csv: write failed for " + path);
}

// Uniform-grid point locator over the mesh cells. locate() returns the index
// of a containing cell or -1. Points on shared edges resolve to the lowest
// cell index that passes the (slightly tolerant) barycentric test.
class PointLocator {
 public:
  explicit PointLocator(const TriMesh& mesh, int grid = 64)
      : mesh_(&mesh), grid_(grid), bins_(static_cast<size_t>(grid) * grid) {
    for (int t = 0; t < mesh.num_cells(); ++t) {
      double xmin = 1e30, xmax = -1e30, ymin = 1e30, ymax = -1e30;
      for (int k = 0; k < 3; ++k) {
        const Vec2& v = mesh.vertices[mesh.triangles[t][k]];
        xmin = std::min(xmin, v.x);
        xmax = std::max(xmax, v.x);
        ymin = std::min(ymin, v.y);
        ymax = std::max(ymax, v.y);
      }
      const int i0 = clampi(cell_of(xmin)), i1 = clampi(cell_of(xmax));
      const int j0 = clampi(cell_of(ymin)), j1 = clampi(cell_of(ymax));
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) bins_[static_cast<size_t>(j) * grid_ + i].push_back(t);
    }
  }

  int locate(double x, double y, double tol = 1e-12) const {
    const int i = clampi(cell_of(x)), j = clampi(cell_of(y));
    for (int t : bins_[static_cast<size_t>(j) * grid_ + i]) {
      if (inside(t, x, y, tol)) return t;
    }
    return -1;
  }

 private:
  int cell_of(double v) const {
    return static_cast<int>(std::floor((v + 1.0) / 2.0 * grid_));
  }
  int clampi(int i) const { return std::min(std::max(i, 0), grid_ - 1); }
  bool inside(int t, double x, double y, double tol) const {
    const Vec2& a = mesh_->vertices[mesh_->triangles[t][0]];
    const Vec2& b = mesh_->vertices[mesh_->triangles[t][1]];
    const Vec2& c = mesh_->vertices[mesh_->triangles[t][2]];
    const Vec2 p{x, y};
    const double s0 = detail::tri_signed_area(a, b, p);
    const double s1 = detail::tri_signed_area(b, c, p);
    const double s2 = detail::tri_signed_area(c, a, p);
    return s0 >= -tol && s1 >= -tol && s2 >= -tol;
  }

  const TriMesh* mesh_;
  int grid_;
  std::vector<std::vector<int>> bins_;
};

}  // namespace eit
