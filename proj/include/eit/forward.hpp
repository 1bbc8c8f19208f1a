#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "eit/basis.hpp"
#include "eit/errors.hpp"
#include "eit/mesh.hpp"
#include "eit/phantom.hpp"

namespace eit {

// Symmetric m x m boundary-response matrix with a role tag recording what it
// represents in the measurement pipeline.
struct MeasurementMatrix {
  enum class Role { FSigma, V, VDelta, EDelta };
  int m = 0;
  Eigen::MatrixXd entries;
  Role role = Role::FSigma;
  double delta = 0.0;       // noise level used to produce VDelta / EDelta
  std::uint64_t seed = 0;   // RNG seed used to produce VDelta / EDelta
};

inline const char* role_name(MeasurementMatrix::Role role) {
  switch (role) {
    case MeasurementMatrix::Role::FSigma: return "F_sigma";
    case MeasurementMatrix::Role::V: return "V";
    case MeasurementMatrix::Role::VDelta: return "V_delta";
    case MeasurementMatrix::Role::EDelta: return "E_delta";
  }
  return "unknown";
}

inline MeasurementMatrix::Role parse_role(const std::string& s) {
  if (s == "F_sigma") return MeasurementMatrix::Role::FSigma;
  if (s == "V") return MeasurementMatrix::Role::V;
  if (s == "V_delta") return MeasurementMatrix::Role::VDelta;
  if (s == "E_delta") return MeasurementMatrix::Role::EDelta;
  throw ParameterError("parse_role: unknown role '" + s + "'");
}

// Finite-element solver for the conductivity Neumann problem on a disk mesh:
// continuous piecewise-linear elements, cellwise-constant sigma, and the
// zero-boundary-mean constraint imposed through one Lagrange multiplier so
// the bordered system stays symmetric and uniquely solvable.
class NeumannSolver {
 public:
  NeumannSolver(const TriMesh& mesh, const Eigen::VectorXd& sigma) : mesh_(&mesh) {
    const int N = mesh.num_vertices();
    const int M = mesh.num_cells();
    if (sigma.size() != M) throw ParameterError("NeumannSolver: sigma length must match cell count");
    if (!(sigma.minCoeff() > 0.0)) throw ParameterError("NeumannSolver: sigma must be strictly positive");

    // Stiffness: integral of sigma grad(u).grad(v), exact for P1.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(M) * 9 + static_cast<size_t>(mesh.boundary_edges.size()) * 4);
    for (int t = 0; t < M; ++t) {
      const auto& tri = mesh.triangles[t];
      const Vec2& a = mesh.vertices[tri[0]];
      const Vec2& b = mesh.vertices[tri[1]];
      const Vec2& c = mesh.vertices[tri[2]];
      const double two_area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
      const double area = 0.5 * two_area;
      Eigen::Matrix<double, 3, 2> grad;
      grad.row(0) << (b.y - c.y) / two_area, (c.x - b.x) / two_area;
      grad.row(1) << (c.y - a.y) / two_area, (a.x - c.x) / two_area;
      grad.row(2) << (a.y - b.y) / two_area, (b.x - a.x) / two_area;
      const Eigen::Matrix3d local = sigma[t] * area * (grad * grad.transpose());
      for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s) trip.emplace_back(tri[r], tri[s], local(r, s));
    }

    // Mean constraint functional c_v = integral of the hat function over the
    // polygonal boundary: each edge of length L adds L/2 to both endpoints.
    Eigen::VectorXd cvec = Eigen::VectorXd::Zero(N);
    for (const auto& e : mesh.boundary_edges) {
      const Vec2& a = mesh.vertices[e[0]];
      const Vec2& b = mesh.vertices[e[1]];
      const double L = std::hypot(b.x - a.x, b.y - a.y);
      cvec[e[0]] += 0.5 * L;
      cvec[e[1]] += 0.5 * L;
    }
    for (int v = 0; v < N; ++v) {
      if (cvec[v] != 0.0) {
        trip.emplace_back(v, N, cvec[v]);
        trip.emplace_back(N, v, cvec[v]);
      }
    }

    Eigen::SparseMatrix<double> B(N + 1, N + 1);
    B.setFromTriplets(trip.begin(), trip.end());
    B.makeCompressed();
    lu_.compute(B);
    if (lu_.info() != Eigen::Success)
      throw NumericalError("NeumannSolver: factorization of the constrained system failed");
  }

  // Nodal potential for the current pattern g_j; boundary data integrated
  // with 2-point Gauss quadrature per boundary edge.
  Eigen::VectorXd solve_pattern(int j) const {
    return solve_density([j](double phi) { return current_density(j, phi); });
  }

  Eigen::VectorXd solve_density(const std::function<double(double)>& g) const {
    const int N = mesh_->num_vertices();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N + 1);
    constexpr double gauss_s[2] = {0.5 - 0.28867513459481287, 0.5 + 0.28867513459481287};
    for (const auto& e : mesh_->boundary_edges) {
      const Vec2& a = mesh_->vertices[e[0]];
      const Vec2& b = mesh_->vertices[e[1]];
      const double L = std::hypot(b.x - a.x, b.y - a.y);
      for (const double s : gauss_s) {
        const double px = a.x + s * (b.x - a.x);
        const double py = a.y + s * (b.y - a.y);
        const double gv = g(std::atan2(py, px));
        rhs[e[0]] += 0.5 * L * gv * (1.0 - s);
        rhs[e[1]] += 0.5 * L * gv * s;
      }
    }
    const Eigen::VectorXd sol = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success) throw NumericalError("NeumannSolver: solve failed");
    return sol.head(N);
  }

  // Boundary pairing: integral over the polygonal boundary of g_i times the
  // trace of a nodal field, same edgewise 2-point rule as the load.
  double boundary_pairing(int i, const Eigen::VectorXd& u) const {
    constexpr double gauss_s[2] = {0.5 - 0.28867513459481287, 0.5 + 0.28867513459481287};
    double sum = 0.0;
    for (const auto& e : mesh_->boundary_edges) {
      const Vec2& a = mesh_->vertices[e[0]];
      const Vec2& b = mesh_->vertices[e[1]];
      const double L = std::hypot(b.x - a.x, b.y - a.y);
      for (const double s : gauss_s) {
        const double px = a.x + s * (b.x - a.x);
        const double py = a.y + s * (b.y - a.y);
        const double gv = current_density(i, std::atan2(py, px));
        const double uv = (1.0 - s) * u[e[0]] + s * u[e[1]];
        sum += 0.5 * L * gv * uv;
      }
    }
    return sum;
  }

  const TriMesh& mesh() const { return *mesh_; }

 private:
  const TriMesh* mesh_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

inline Eigen::VectorXd solve_neumann(const TriMesh& mesh, const Eigen::VectorXd& sigma, int j) {
  return NeumannSolver(mesh, sigma).solve_pattern(j);
}

// Boundary-response matrix F(sigma): entry (i, j) pairs pattern g_i with the
// trace of the potential driven by g_j; symmetrized by averaging with the
// transpose (the continuous operator is self-adjoint).
inline MeasurementMatrix measure_F(const TriMesh& mesh, const Phantom& phantom,
                                   const CurrentBasis& basis) {
  const Eigen::VectorXd sigma = phantom.rasterize_sigma(mesh);
  const NeumannSolver solver(mesh, sigma);
  const int m = basis.m;
  Eigen::MatrixXd F(m, m);
  for (int j = 1; j <= m; ++j) {
    const Eigen::VectorXd u = solver.solve_pattern(j);
    for (int i = 1; i <= m; ++i) F(i - 1, j - 1) = solver.boundary_pairing(i, u);
  }
  MeasurementMatrix out;
  out.m = m;
  out.entries = 0.5 * (F + F.transpose());
  out.role = MeasurementMatrix::Role::FSigma;
  return out;
}

// Data matrix V = F(1) - F(sigma), both factors computed on the same forward
// mesh so their shared discretization error cancels.
inline MeasurementMatrix synthesize_V(const Phantom& phantom, const CurrentBasis& basis,
                                      const TriMesh& forward_mesh) {
  const MeasurementMatrix F1 = measure_F(forward_mesh, Phantom{}, basis);
  const MeasurementMatrix Fs = measure_F(forward_mesh, phantom, basis);
  MeasurementMatrix out;
  out.m = basis.m;
  out.entries = F1.entries - Fs.entries;
  out.role = MeasurementMatrix::Role::V;
  return out;
}

inline MeasurementMatrix synthesize_V(const Phantom& phantom, const CurrentBasis& basis,
                                      double h_forward) {
  return synthesize_V(phantom, basis, build_disk_mesh(h_forward));
}

namespace detail {
// Deterministic standard normals: explicit Box-Muller over the top 53 bits
// of a 64-bit generator, so streams are identical across platforms and
// standard library versions.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : gen_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * M_PI * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

 private:
  double uniform01() {
    // In (0, 1): never 0, so the log above is finite.
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};
}  // namespace detail

// Symmetric noise matrix with i.i.d. standard normal upper triangle, rescaled
// so its Frobenius norm is exactly delta times the Frobenius norm of V.
inline MeasurementMatrix noise_matrix(const MeasurementMatrix& V, double delta,
                                      std::uint64_t seed) {
  if (!(delta >= 0.0) || !(delta < 1.0)) throw ParameterError("noise_matrix: require 0 <= delta < 1");
  const int m = V.m;
  MeasurementMatrix out;
  out.m = m;
  out.role = MeasurementMatrix::Role::EDelta;
  out.delta = delta;
  out.seed = seed;
  if (delta == 0.0) {
    out.entries = Eigen::MatrixXd::Zero(m, m);
    return out;
  }
  detail::NormalStream rng(seed);
  Eigen::MatrixXd E(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      E(i, j) = rng.next();
      E(j, i) = E(i, j);
    }
  }
  const double norm_e = E.norm();
  if (!(norm_e > 0.0)) throw NumericalError("noise_matrix: degenerate noise draw");
  E *= delta * V.entries.norm() / norm_e;
  out.entries = std::move(E);
  return out;
}

// Noisy data V + E. delta = 0 returns the entries of V verbatim.
inline MeasurementMatrix add_noise(const MeasurementMatrix& V, double delta, std::uint64_t seed) {
  if (V.role != MeasurementMatrix::Role::V)
    throw ParameterError("add_noise: input must have role V");
  MeasurementMatrix out;
  out.m = V.m;
  out.role = MeasurementMatrix::Role::VDelta;
  out.delta = delta;
  out.seed = seed;
  if (delta == 0.0) {
    out.entries = V.entries;
    return out;
  }
  out.entries = V.entries + noise_matrix(V, delta, seed).entries;
  return out;
}

// CSV export/import, row-major with a schema line and a metadata header.
inline void write_measurement_csv(const MeasurementMatrix& M, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("write_measurement_csv: cannot open " + path);
  char buf[128];
  out << "# schema=measurement/v1\n";
  std::snprintf(buf, sizeof(buf), "# m=%d role=%s delta=%.17g seed=%llu\n", M.m, role_name(M.role),
                M.delta, static_cast<unsigned long long>(M.seed));
  out << buf;
  for (int i = 0; i < M.m; ++i) {
    for (int j = 0; j < M.m; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", M.entries(i, j));
      out << buf << (j + 1 == M.m ? "\n" : ",");
    }
  }
  if (!out) throw NumericalError("write_measurement_csv: write failed for " + path);
}

inline MeasurementMatrix read_measurement_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("read_measurement_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "# schema=measurement/v1")
    throw ParameterError("read_measurement_csv: bad schema line in " + path);
  if (!std::getline(in, line) || line.rfind("# m=", 0) != 0)
    throw ParameterError("read_measurement_csv: bad header line in " + path);
  MeasurementMatrix M;
  {
    char role_buf[32] = {0};
    unsigned long long seed = 0;
    if (std::sscanf(line.c_str(), "# m=%d role=%31s delta=%lg seed=%llu", &M.m, role_buf, &M.delta,
                    &seed) != 4)
      throw ParameterError("read_measurement_csv: unparsable header in " + path);
    M.role = parse_role(role_buf);
    M.seed = seed;
  }
  if (M.m < 1) throw ParameterError("read_measurement_csv: invalid m in " + path);
  M.entries.resize(M.m, M.m);
  for (int i = 0; i < M.m; ++i) {
    if (!std::getline(in, line))
      throw ParameterError("read_measurement_csv: truncated matrix in " + path);
    size_t pos = 0;
    for (int j = 0; j < M.m; ++j) {
      size_t used = 0;
      M.entries(i, j) = std::stod(line.substr(pos), &used);
      pos += used;
      if (j + 1 < M.m) {
        if (pos >= line.size() || line[pos] != ',')
          throw ParameterError("read_measurement_csv: malformed row in " + path);
        ++pos;
      }
    }
  }
  return M;
}

}  // namespace eit
