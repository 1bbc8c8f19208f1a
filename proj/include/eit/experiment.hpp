#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <queue>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eit/analysis.hpp"
#include "eit/assemble.hpp"
#include "eit/errors.hpp"
#include "eit/forward.hpp"
#include "eit/mesh.hpp"
#include "eit/phantom.hpp"
#include "eit/reconstruct.hpp"
#include "eit/spectral.hpp"

namespace eit {

// One experiment's worth of settings. JSON config files carry the same keys;
// command-line flags override individual fields after the file is read.
struct ExperimentConfig {
  int m = 32;
  double h_recon = 0.02;
  double h_forward = 0.0;  // 0: forward mesh = reconstruction mesh refined twice
  std::string phantom_path;
  double delta = 0.01;
  double alpha = -1.0;  // negative: use the a-priori rule
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::vector<std::string> alphas;  // sweep grid: numbers and/or "rule"
  int max_iters = 20000;
  double tol = 1e-10;
  double s = 0.5;       // smoothness exponent for the reported bound
  bool project = false; // also compute the mode-span projection error

  void validate_common() const {
    if (m < 4 || m % 2 != 0) throw ParameterError("config: m must be even and >= 4");
    if (!(h_recon > 0.0) || !(h_recon < 1.0)) throw ParameterError("config: h must be in (0, 1)");
    if (h_forward != 0.0 && (!(h_forward > 0.0) || !(h_forward < 1.0)))
      throw ParameterError("config: h_forward must be in (0, 1) when given");
    if (!(delta >= 0.0) || !(delta < 1.0)) throw ParameterError("config: delta must be in [0, 1)");
    if (out_dir.empty()) throw ParameterError("config: output directory must not be empty");
  }
};

inline ExperimentConfig config_from_json(const nlohmann::json& doc) {
  ExperimentConfig cfg;
  if (!doc.is_object()) throw ParameterError("config: expected a JSON object");
  cfg.m = doc.value("m", cfg.m);
  cfg.h_recon = doc.value("h", cfg.h_recon);
  cfg.h_forward = doc.value("h_forward", cfg.h_forward);
  cfg.phantom_path = doc.value("phantom", cfg.phantom_path);
  cfg.delta = doc.value("delta", cfg.delta);
  if (doc.contains("alpha")) {
    if (doc["alpha"].is_string()) {
      if (doc["alpha"].get<std::string>() != "rule")
        throw ParameterError("config: alpha must be a number or \"rule\"");
      cfg.alpha = -1.0;
    } else {
      cfg.alpha = doc["alpha"].get<double>();
      if (!(cfg.alpha > 0.0)) throw ParameterError("config: alpha must be > 0");
    }
  }
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.out_dir = doc.value("out", cfg.out_dir);
  if (doc.contains("alphas")) {
    for (const auto& item : doc["alphas"]) {
      cfg.alphas.push_back(item.is_string() ? item.get<std::string>()
                                            : std::to_string(item.get<double>()));
    }
  }
  cfg.max_iters = doc.value("max_iters", cfg.max_iters);
  cfg.tol = doc.value("tol", cfg.tol);
  cfg.s = doc.value("s", cfg.s);
  cfg.project = doc.value("project", cfg.project);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("load_config: cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError("load_config: invalid JSON in " + path + ": " + e.what());
  }
  try {
    return config_from_json(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError("load_config: bad config schema in " + path + ": " + e.what());
  }
}

// Half-maximum support of a cellwise field: cells where |mu| reaches half of
// the peak magnitude, their area-weighted centroid, and the number of
// connected components in the cell adjacency graph.
struct SupportSummary {
  double threshold = 0.0;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
  int components = 0;
  int cells = 0;
};

inline SupportSummary support_summary(const TriMesh& mesh, const Eigen::VectorXd& mu) {
  if (mu.size() != mesh.num_cells()) throw ParameterError("support_summary: size mismatch");
  SupportSummary out;
  const double peak = mu.size() ? mu.cwiseAbs().maxCoeff() : 0.0;
  out.threshold = 0.5 * peak;
  if (peak == 0.0) return out;

  const CellGeometry g = cell_geometry(mesh);
  std::vector<char> in_support(mesh.num_cells(), 0);
  double area_sum = 0.0, cx = 0.0, cy = 0.0;
  for (int t = 0; t < mesh.num_cells(); ++t) {
    if (std::abs(mu[t]) >= out.threshold) {
      in_support[t] = 1;
      ++out.cells;
      area_sum += g.area[t];
      cx += g.area[t] * g.centroid(t, 0);
      cy += g.area[t] * g.centroid(t, 1);
    }
  }
  out.centroid_x = cx / area_sum;
  out.centroid_y = cy / area_sum;

  const std::vector<std::array<int, 3>> nb = cell_neighbors(mesh);
  std::vector<char> seen(mesh.num_cells(), 0);
  for (int t = 0; t < mesh.num_cells(); ++t) {
    if (!in_support[t] || seen[t]) continue;
    ++out.components;
    std::queue<int> queue;
    queue.push(t);
    seen[t] = 1;
    while (!queue.empty()) {
      const int cur = queue.front();
      queue.pop();
      for (int e = 0; e < 3; ++e) {
        const int nxt = nb[cur][e];
        if (nxt >= 0 && in_support[nxt] && !seen[nxt]) {
          seen[nxt] = 1;
          queue.push(nxt);
        }
      }
    }
  }
  return out;
}

namespace detail {
inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ParameterError("cannot create output directory " + dir + ": " + ec.message());
}

inline const char* report_header() {
  return "m,h_recon,h_forward,delta,alpha,alpha_source,seed,norm_V,l2_error,projection_error,"
         "coefficient_gap,bound_value,support_threshold,support_cx,support_cy,"
         "support_components,support_cells\n";
}

inline void append_report_row(std::ofstream& out, const ExperimentConfig& cfg, double h_forward,
                              double alpha, const char* alpha_source, double norm_v,
                              const ErrorReport& rep, const SupportSummary& sup) {
  char buf[640];
  std::snprintf(buf, sizeof(buf),
                "%d,%.17g,%.17g,%.17g,%.17g,%s,%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                "%.17g,%d,%d\n",
                cfg.m, cfg.h_recon, h_forward, cfg.delta, alpha, alpha_source,
                static_cast<unsigned long long>(cfg.seed), norm_v, rep.l2_error,
                rep.projection_error, rep.coefficient_gap, rep.bound_value, sup.threshold,
                sup.centroid_x, sup.centroid_y, sup.components, sup.cells);
  out << buf;
}
}  // namespace detail

// Shared state for the pipeline commands: meshes, data, and the assembled
// reconstruction system for one phantom.
struct Pipeline {
  ExperimentConfig cfg;
  Phantom phantom;
  TriMesh recon_mesh;
  TriMesh forward_mesh;
  double h_forward_effective = 0.0;
  CurrentBasis basis{4};
  SpectralModel model;
  MeasurementMatrix V;
  MeasurementMatrix Vd;
  SensitivityTensor A;
  AreaMatrix P;
};

inline Pipeline build_pipeline(const ExperimentConfig& cfg) {
  cfg.validate_common();
  if (cfg.phantom_path.empty()) throw ParameterError("config: phantom file is required");
  Pipeline p{cfg,          load_phantom(cfg.phantom_path),
             TriMesh{},    TriMesh{},
             0.0,          CurrentBasis(cfg.m),
             SpectralModel{}, MeasurementMatrix{},
             MeasurementMatrix{}, SensitivityTensor{},
             AreaMatrix{}};
  p.recon_mesh = build_disk_mesh(cfg.h_recon);
  if (cfg.h_forward > 0.0) {
    p.forward_mesh = build_disk_mesh(cfg.h_forward);
    p.h_forward_effective = cfg.h_forward;
  } else {
    p.forward_mesh = refine(refine(p.recon_mesh));
    p.h_forward_effective = p.forward_mesh.h;
  }
  p.model = build_spectral_model(cfg.m);
  p.V = synthesize_V(p.phantom, p.basis, p.forward_mesh);
  p.Vd = add_noise(p.V, cfg.delta, cfg.seed);
  p.A = sensitivity(p.recon_mesh, p.basis);
  p.P = area_matrix(p.recon_mesh);
  return p;
}

inline RegConfig reg_config_of(const ExperimentConfig& cfg) {
  return cfg.alpha < 0.0 ? RegConfig::from_rule(cfg.delta)
                         : RegConfig::explicit_alpha(cfg.alpha, cfg.delta);
}

// eit mesh: write the reconstruction mesh.
inline int run_mesh(const ExperimentConfig& cfg) {
  cfg.validate_common();
  detail::ensure_out_dir(cfg.out_dir);
  const TriMesh mesh = build_disk_mesh(cfg.h_recon);
  write_mesh_csv(mesh, detail::join_path(cfg.out_dir, "mesh.csv"));
  std::printf("mesh: h=%g cells=%d vertices=%d\n", cfg.h_recon, mesh.num_cells(),
              mesh.num_vertices());
  return 0;
}

// eit forward: synthesize measurement data and write it out.
inline int run_forward(const ExperimentConfig& cfg) {
  cfg.validate_common();
  if (cfg.phantom_path.empty()) throw ParameterError("config: phantom file is required");
  detail::ensure_out_dir(cfg.out_dir);
  const Phantom phantom = load_phantom(cfg.phantom_path);
  const CurrentBasis basis(cfg.m);
  const TriMesh forward_mesh = cfg.h_forward > 0.0
                                   ? build_disk_mesh(cfg.h_forward)
                                   : refine(refine(build_disk_mesh(cfg.h_recon)));
  const MeasurementMatrix V = synthesize_V(phantom, basis, forward_mesh);
  const MeasurementMatrix Vd = add_noise(V, cfg.delta, cfg.seed);
  write_measurement_csv(V, detail::join_path(cfg.out_dir, "V.csv"));
  write_measurement_csv(Vd, detail::join_path(cfg.out_dir, "V_delta.csv"));
  std::printf("forward: m=%d norm_V=%.6g delta=%g seed=%llu\n", cfg.m, V.entries.norm(),
              cfg.delta, static_cast<unsigned long long>(cfg.seed));
  return 0;
}

// eit reconstruct: full pipeline, one regularization parameter.
inline int run_reconstruct(const ExperimentConfig& cfg) {
  const Pipeline p = build_pipeline(cfg);
  detail::ensure_out_dir(cfg.out_dir);
  const RegConfig reg = reg_config_of(cfg);
  const double alpha = reg.resolve_alpha(cfg.m);
  ReconField field = reconstruct(p.A, p.P, p.Vd, reg);
  field.mesh = &p.recon_mesh;

  ProjectionResult projection;
  const ProjectionResult* proj_ptr = nullptr;
  if (cfg.project) {
    const ZernikeBasis zbasis(cfg.m);
    projection = project_true(zbasis, p.phantom, p.recon_mesh);
    proj_ptr = &projection;
  }
  const ErrorReport rep = error_report(p.recon_mesh, field, p.phantom, p.model, p.V, p.Vd, alpha,
                                       cfg.h_recon, cfg.s, proj_ptr);
  const SupportSummary sup = support_summary(p.recon_mesh, field.mu);

  write_recon_csv(p.recon_mesh, field, detail::join_path(cfg.out_dir, "recon.csv"));
  write_recon_pgm(p.recon_mesh, field, detail::join_path(cfg.out_dir, "recon.pgm"));
  std::ofstream report(detail::join_path(cfg.out_dir, "report.csv"), std::ios::binary);
  if (!report) throw ParameterError("run_reconstruct: cannot open report.csv");
  report << "# schema=report/v1\n" << detail::report_header();
  detail::append_report_row(report, cfg, p.h_forward_effective, alpha,
                            reg.source == RegConfig::Source::Rule ? "rule" : "explicit",
                            p.V.entries.norm(), rep, sup);

  std::printf("reconstruct: alpha=%.6g (%s) l2_error=%.6g gap=%.6g support=(%.4f,%.4f) x%d\n",
              alpha, reg.source == RegConfig::Source::Rule ? "rule" : "explicit", rep.l2_error,
              rep.coefficient_gap, sup.centroid_x, sup.centroid_y, sup.components);
  return 0;
}

// eit sweep: reconstruct once per requested alpha; the rule value of alpha is
// recorded in a trailing comment so the selection is visible in the output.
inline int run_sweep(const ExperimentConfig& cfg) {
  if (cfg.alphas.empty()) throw ParameterError("sweep: alpha list must not be empty");
  const Pipeline p = build_pipeline(cfg);
  detail::ensure_out_dir(cfg.out_dir);
  const double rule_alpha = alpha_rule(cfg.m, cfg.delta);

  std::ofstream report(detail::join_path(cfg.out_dir, "report.csv"), std::ios::binary);
  if (!report) throw ParameterError("run_sweep: cannot open report.csv");
  report << "# schema=report/v1\n" << detail::report_header();

  for (size_t i = 0; i < cfg.alphas.size(); ++i) {
    const std::string& spec = cfg.alphas[i];
    double alpha = 0.0;
    const char* source = "explicit";
    if (spec == "rule") {
      alpha = rule_alpha;
      source = "rule";
    } else {
      try {
        alpha = std::stod(spec);
      } catch (const std::exception&) {
        throw ParameterError("sweep: bad alpha entry '" + spec + "'");
      }
      if (!(alpha > 0.0)) throw ParameterError("sweep: alpha entries must be > 0");
    }
    const RegConfig reg = RegConfig::explicit_alpha(alpha, cfg.delta);
    ReconField field = reconstruct(p.A, p.P, p.Vd, reg);
    field.mesh = &p.recon_mesh;
    const ErrorReport rep = error_report(p.recon_mesh, field, p.phantom, p.model, p.V, p.Vd,
                                         alpha, cfg.h_recon, cfg.s);
    const SupportSummary sup = support_summary(p.recon_mesh, field.mu);
    char name[64];
    std::snprintf(name, sizeof(name), "recon_alpha%02zu.csv", i);
    write_recon_csv(p.recon_mesh, field, detail::join_path(cfg.out_dir, name));
    std::snprintf(name, sizeof(name), "recon_alpha%02zu.pgm", i);
    write_recon_pgm(p.recon_mesh, field, detail::join_path(cfg.out_dir, name));
    detail::append_report_row(report, cfg, p.h_forward_effective, alpha, source,
                              p.V.entries.norm(), rep, sup);
    std::printf("sweep[%zu]: alpha=%.6g (%s) l2_error=%.6g\n", i, alpha, source, rep.l2_error);
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "# rule_alpha=%.17g\n", rule_alpha);
  report << buf;
  return 0;
}

// eit compare: one-shot solve vs conjugate-gradient baseline on identical
// inputs. Timings go to the log, not the CSV, so reruns stay byte-identical.
inline int run_compare(const ExperimentConfig& cfg) {
  const Pipeline p = build_pipeline(cfg);
  detail::ensure_out_dir(cfg.out_dir);
  const RegConfig reg = reg_config_of(cfg);
  const double alpha = reg.resolve_alpha(cfg.m);

  const auto t0 = std::chrono::steady_clock::now();
  ReconField direct = reconstruct(p.A, p.P, p.Vd, reg);
  const auto t1 = std::chrono::steady_clock::now();
  IterativeResult iter = iterative_baseline(p.A, p.P, p.Vd, reg, cfg.max_iters, cfg.tol);
  const auto t2 = std::chrono::steady_clock::now();
  direct.mesh = &p.recon_mesh;
  iter.field.mesh = &p.recon_mesh;

  const double direct_norm = direct.mu.norm();
  const double diff_rel =
      (direct.mu - iter.field.mu).norm() / (direct_norm > 0.0 ? direct_norm : 1.0);
  const double direct_sec = std::chrono::duration<double>(t1 - t0).count();
  const double iter_sec = std::chrono::duration<double>(t2 - t1).count();

  write_recon_pgm(p.recon_mesh, direct, detail::join_path(cfg.out_dir, "direct.pgm"));
  write_recon_pgm(p.recon_mesh, iter.field, detail::join_path(cfg.out_dir, "iterative.pgm"));
  std::ofstream out(detail::join_path(cfg.out_dir, "compare.csv"), std::ios::binary);
  if (!out) throw ParameterError("run_compare: cannot open compare.csv");
  out << "# schema=compare/v1\n";
  out << "m,h_recon,delta,alpha,seed,diff_rel,direct_iterations,iterative_iterations,"
         "iterative_converged\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%llu,%.17g,%d,%d,%d\n", cfg.m,
                cfg.h_recon, cfg.delta, alpha, static_cast<unsigned long long>(cfg.seed),
                diff_rel, 0, iter.iterations, iter.converged ? 1 : 0);
  out << buf;

  std::printf("compare: diff_rel=%.3g direct=%.3fs iterative=%.3fs (%d iterations%s)\n", diff_rel,
              direct_sec, iter_sec, iter.iterations, iter.converged ? "" : ", NOT converged");
  return 0;
}

// eit diagnose: self-test of the closed-form spectrum and the forward
// solver's agreement with the analytic homogeneous response. Exit 3 when a
// threshold is breached.
inline int run_diagnose(const ExperimentConfig& cfg) {
  if (cfg.m < 4 || cfg.m % 2 != 0) throw ParameterError("diagnose: m must be even and >= 4");
  if (cfg.m > 16) throw ParameterError("diagnose: m must be <= 16 (mode-recovery cost)");

  const SpectrumCheck spec_check = spectrum_check(cfg.m);
  const double spec_tol = cfg.m <= 8 ? 1e-6 : 1e-4;
  std::printf("spectrum: m=%d recovered %d eigenvalues, max relative deviation %.3e (tol %.0e)\n",
              cfg.m, static_cast<int>(spec_check.recovered.size()), spec_check.max_rel_err,
              spec_tol);
  std::printf("spectrum extremes: %.12f vs expected %.12f | %.12f vs expected %.12f\n",
              spec_check.recovered[spec_check.recovered.size() - 1],
              spec_check.expected[spec_check.expected.size() - 1], spec_check.recovered[0],
              spec_check.expected[0]);

  const double h_fem = 0.05;
  const CurrentBasis basis(cfg.m);
  const TriMesh mesh = build_disk_mesh(h_fem);
  const MeasurementMatrix F1 = measure_F(mesh, Phantom{}, basis);
  const Eigen::VectorXd diag = ntd_identity(cfg.m);
  double worst = 0.0;
  std::printf("homogeneous response (h=%g):\n  pattern  analytic      computed      rel.err\n",
              h_fem);
  for (int j = 0; j < cfg.m; ++j) {
    const double rel = std::abs(F1.entries(j, j) - diag[j]) / diag[j];
    worst = std::max(worst, rel);
    std::printf("  %3d      %.9f   %.9f   %.2e\n", j + 1, diag[j], F1.entries(j, j), rel);
  }
  double worst_off = 0.0;
  for (int i = 0; i < cfg.m; ++i)
    for (int j = 0; j < cfg.m; ++j)
      if (i != j)
        worst_off = std::max(worst_off,
                             std::abs(F1.entries(i, j)) / std::sqrt(diag[i] * diag[j]));
  std::printf("worst diagonal deviation %.3e, worst off-diagonal (scaled) %.3e (tol 2e-2)\n",
              worst, worst_off);

  const bool ok = spec_check.max_rel_err <= spec_tol && worst <= 2e-2 && worst_off <= 2e-2;
  std::printf("diagnose: %s\n", ok ? "OK" : "THRESHOLD BREACH");
  return ok ? 0 : 3;
}

}  // namespace eit
