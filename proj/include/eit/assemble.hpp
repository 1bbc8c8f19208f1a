#pragma once

#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eit/basis.hpp"
#include "eit/errors.hpp"
#include "eit/forward.hpp"
#include "eit/mesh.hpp"
#include "eit/quadrature.hpp"

namespace eit {

// Cellwise sensitivity integrals: column j holds, for every pattern pair
// (k, l), the integral over cell j of grad(u_k) . grad(u_l). Rows enumerate
// (k, l) row-major, so rows (k, l) and (l, k) are exact duplicates.
struct SensitivityTensor {
  int m = 0;
  int M = 0;
  Eigen::MatrixXd full;  // m^2 x M

  int row(int k, int l) const { return (k - 1) * m + (l - 1); }  // 1-based patterns
};

// Deduplicated view over pairs k <= l. weight holds the row multiplicity
// (1 on the diagonal, 2 off it), so for any kappa and flattened response v:
//   A^T A = C^T diag(weight) C   and   A^T v = C^T diag(weight) v_c.
struct CompressedSensitivity {
  int m = 0;
  int M = 0;
  Eigen::MatrixXd rows;                     // m(m+1)/2 x M
  Eigen::VectorXd weight;                   // multiplicity per pair row
  std::vector<std::pair<int, int>> pairs;   // (k, l), k <= l, 1-based
};

// Diagonal matrix of cell areas.
struct AreaMatrix {
  Eigen::VectorXd diag;
};

inline AreaMatrix area_matrix(const TriMesh& mesh) {
  AreaMatrix P;
  P.diag = cell_geometry(mesh).area;
  return P;
}

// Assemble the sensitivity tensor with a triangle rule exact for the
// integrand's polynomial degree (2 * max frequency - 2). Cells are processed
// in index order with plain summation, so the result is deterministic.
inline SensitivityTensor sensitivity(const TriMesh& mesh, const CurrentBasis& basis) {
  const int m = basis.m;
  const int n_max = basis.max_order();
  const int M = mesh.num_cells();
  const std::vector<TriPoint> ref_rule = triangle_rule(2 * n_max - 2);
  const int nq = static_cast<int>(ref_rule.size());

  SensitivityTensor A;
  A.m = m;
  A.M = M;
  A.full.resize(m * m, M);

  const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
  std::vector<std::complex<double>> powers(n_max);  // z^0 .. z^(n_max-1)
  Eigen::MatrixXd G(m, 2 * nq);                     // sqrt(w)-scaled gradients
  Eigen::MatrixXd S(m, m);

  for (int t = 0; t < M; ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec2& a = mesh.vertices[tri[0]];
    const Vec2& b = mesh.vertices[tri[1]];
    const Vec2& c = mesh.vertices[tri[2]];
    const std::vector<TriPoint> rule = map_rule(ref_rule, a.x, a.y, b.x, b.y, c.x, c.y);

    for (int q = 0; q < nq; ++q) {
      const std::complex<double> z(rule[q].x, rule[q].y);
      powers[0] = {1.0, 0.0};
      for (int n = 1; n < n_max; ++n) powers[n] = powers[n - 1] * z;
      const double sw = std::sqrt(rule[q].w);
      for (int j = 1; j <= m; ++j) {
        const std::complex<double>& w = powers[trig_order(j) - 1];
        if (j % 2 == 1) {
          G(j - 1, 2 * q) = sw * inv_sqrt_pi * w.imag();
          G(j - 1, 2 * q + 1) = sw * inv_sqrt_pi * w.real();
        } else {
          G(j - 1, 2 * q) = sw * inv_sqrt_pi * w.real();
          G(j - 1, 2 * q + 1) = -sw * inv_sqrt_pi * w.imag();
        }
      }
    }

    S.setZero();
    S.selfadjointView<Eigen::Upper>().rankUpdate(G);
    for (int k = 0; k < m; ++k) {
      A.full(k * m + k, t) = S(k, k);
      for (int l = k + 1; l < m; ++l) {
        A.full(k * m + l, t) = S(k, l);
        A.full(l * m + k, t) = S(k, l);
      }
    }
  }
  return A;
}

inline CompressedSensitivity compressed_view(const SensitivityTensor& A) {
  CompressedSensitivity C;
  C.m = A.m;
  C.M = A.M;
  const int n_pairs = A.m * (A.m + 1) / 2;
  C.rows.resize(n_pairs, A.M);
  C.weight.resize(n_pairs);
  C.pairs.reserve(n_pairs);
  int r = 0;
  for (int k = 1; k <= A.m; ++k) {
    for (int l = k; l <= A.m; ++l, ++r) {
      C.rows.row(r) = A.full.row(A.row(k, l));
      C.weight[r] = (k == l) ? 1.0 : 2.0;
      C.pairs.emplace_back(k, l);
    }
  }
  return C;
}

// Flatten a symmetric matrix to the k <= l pair ordering of the compressed view.
inline Eigen::VectorXd vec_pairs(const Eigen::MatrixXd& V) {
  if (V.rows() != V.cols()) throw ParameterError("vec_pairs: matrix must be square");
  const int m = static_cast<int>(V.rows());
  Eigen::VectorXd v(m * (m + 1) / 2);
  int r = 0;
  for (int k = 0; k < m; ++k)
    for (int l = k; l < m; ++l, ++r) v[r] = V(k, l);
  return v;
}

// Modeled response of a cellwise contrast: entries sum kappa against the
// sensitivity rows. Symmetric because duplicate rows are exact copies.
inline MeasurementMatrix apply_S(const SensitivityTensor& A, const Eigen::VectorXd& kappa) {
  if (kappa.size() != A.M) throw ParameterError("apply_S: kappa length must match cell count");
  const Eigen::VectorXd flat = A.full * kappa;
  MeasurementMatrix out;
  out.m = A.m;
  out.role = MeasurementMatrix::Role::V;
  out.entries.resize(A.m, A.m);
  for (int k = 0; k < A.m; ++k)
    for (int l = 0; l < A.m; ++l) out.entries(k, l) = flat[k * A.m + l];
  return out;
}

// Binary cache of the assembled tensor, keyed by basis size and mesh hash.
// Layout: 8-byte magic, u32 version, u32 m, u64 M, u64 mesh hash, then the
// m^2 x M entries row-major as native little-endian doubles.
namespace detail {
constexpr char kSensMagic[8] = {'E', 'I', 'T', 'S', 'E', 'N', 'S', 'A'};
constexpr std::uint32_t kSensVersion = 1;
}  // namespace detail

inline void save_sensitivity(const SensitivityTensor& A, std::uint64_t mesh_hash,
                             const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("save_sensitivity: cannot open " + path);
  out.write(detail::kSensMagic, 8);
  const std::uint32_t version = detail::kSensVersion;
  const std::uint32_t m = static_cast<std::uint32_t>(A.m);
  const std::uint64_t M = static_cast<std::uint64_t>(A.M);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&m), 4);
  out.write(reinterpret_cast<const char*>(&M), 8);
  out.write(reinterpret_cast<const char*>(&mesh_hash), 8);
  for (int r = 0; r < A.m * A.m; ++r) {
    for (int c = 0; c < A.M; ++c) {
      const double v = A.full(r, c);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  }
  if (!out) throw NumericalError("save_sensitivity: write failed for " + path);
}

inline SensitivityTensor load_sensitivity(const std::string& path, int expect_m,
                                          std::uint64_t expect_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("load_sensitivity: cannot open " + path);
  char magic[8];
  std::uint32_t version = 0, m = 0;
  std::uint64_t M = 0, hash = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&m), 4);
  in.read(reinterpret_cast<char*>(&M), 8);
  in.read(reinterpret_cast<char*>(&hash), 8);
  if (!in || std::memcmp(magic, detail::kSensMagic, 8) != 0 || version != detail::kSensVersion)
    throw ParameterError("load_sensitivity: bad header in " + path);
  if (static_cast<int>(m) != expect_m || hash != expect_hash)
    throw ParameterError("load_sensitivity: cache key mismatch for " + path);
  SensitivityTensor A;
  A.m = static_cast<int>(m);
  A.M = static_cast<int>(M);
  A.full.resize(A.m * A.m, A.M);
  for (int r = 0; r < A.m * A.m; ++r) {
    for (int c = 0; c < A.M; ++c) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), 8);
      A.full(r, c) = v;
    }
  }
  if (!in) throw ParameterError("load_sensitivity: truncated file " + path);
  return A;
}

}  // namespace eit
