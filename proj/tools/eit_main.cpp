// Command-line front end: mesh | forward | reconstruct | sweep | compare |
// diagnose. Settings come from defaults, then an optional JSON config file,
// then explicit flags, in that order. Exit codes: 0 success, 1 bad usage or
// bad input, 2 numerical failure, 3 diagnostic threshold breach.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eit/errors.hpp"
#include "eit/experiment.hpp"

namespace {

struct CliOpts {
  std::string config_path;
  int m = 0;
  double h = 0.0;
  double h_forward = 0.0;
  double delta = 0.0;
  std::string alpha;
  std::string phantom;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::string> alphas;
  int max_iters = 0;
  double tol = 0.0;
  double s = 0.0;
  bool project = false;

  CLI::Option* o_config = nullptr;
  CLI::Option* o_m = nullptr;
  CLI::Option* o_h = nullptr;
  CLI::Option* o_h_forward = nullptr;
  CLI::Option* o_delta = nullptr;
  CLI::Option* o_alpha = nullptr;
  CLI::Option* o_phantom = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_out = nullptr;
  CLI::Option* o_alphas = nullptr;
  CLI::Option* o_max_iters = nullptr;
  CLI::Option* o_tol = nullptr;
  CLI::Option* o_s = nullptr;
  CLI::Option* o_project = nullptr;
};

std::shared_ptr<CliOpts> add_common(CLI::App* cmd) {
  auto o = std::make_shared<CliOpts>();
  // The mesh-size flag is --h, so the help flag must not claim -h.
  cmd->set_help_flag("--help", "print this help message and exit");
  o->o_config = cmd->add_option("--config", o->config_path, "JSON config file");
  o->o_m = cmd->add_option("--m", o->m, "number of boundary current patterns (even)");
  o->o_h = cmd->add_option("--h", o->h, "reconstruction mesh size");
  o->o_h_forward =
      cmd->add_option("--h-forward", o->h_forward, "forward mesh size (default: refine twice)");
  o->o_delta = cmd->add_option("--delta", o->delta, "relative noise level in [0,1)");
  o->o_alpha = cmd->add_option("--alpha", o->alpha, "regularization parameter or 'rule'");
  o->o_phantom = cmd->add_option("--phantom", o->phantom, "phantom JSON file");
  o->o_seed = cmd->add_option("--seed", o->seed, "noise RNG seed");
  o->o_out = cmd->add_option("--out", o->out, "output directory");
  o->o_alphas = cmd->add_option("--alphas", o->alphas, "sweep alphas (numbers or 'rule')")
                    ->delimiter(',');
  o->o_max_iters = cmd->add_option("--max-iters", o->max_iters, "iterative solver cap");
  o->o_tol = cmd->add_option("--tol", o->tol, "iterative solver relative residual tolerance");
  o->o_s = cmd->add_option("--s", o->s, "smoothness exponent used in the reported bound");
  o->o_project = cmd->add_flag("--project", o->project, "also report the mode-span projection error");
  return o;
}

eit::ExperimentConfig resolve(const CliOpts& o) {
  eit::ExperimentConfig cfg =
      o.o_config->count() ? eit::load_config(o.config_path) : eit::ExperimentConfig{};
  if (o.o_m->count()) cfg.m = o.m;
  if (o.o_h->count()) cfg.h_recon = o.h;
  if (o.o_h_forward->count()) cfg.h_forward = o.h_forward;
  if (o.o_delta->count()) cfg.delta = o.delta;
  if (o.o_alpha->count()) {
    if (o.alpha == "rule") {
      cfg.alpha = -1.0;
    } else {
      try {
        cfg.alpha = std::stod(o.alpha);
      } catch (const std::exception&) {
        throw eit::ParameterError("--alpha must be a number or 'rule'");
      }
      if (!(cfg.alpha > 0.0)) throw eit::ParameterError("--alpha must be > 0");
    }
  }
  if (o.o_phantom->count()) cfg.phantom_path = o.phantom;
  if (o.o_seed->count()) cfg.seed = o.seed;
  if (o.o_out->count()) cfg.out_dir = o.out;
  if (o.o_alphas->count()) cfg.alphas = o.alphas;
  if (o.o_max_iters->count()) cfg.max_iters = o.max_iters;
  if (o.o_tol->count()) cfg.tol = o.tol;
  if (o.o_s->count()) cfg.s = o.s;
  if (o.o_project->count()) cfg.project = o.project;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-iterative reconstruction for the linearized conductivity problem"};
  app.require_subcommand(1);
  int code = 0;

  struct Cmd {
    const char* name;
    const char* help;
    int (*run)(const eit::ExperimentConfig&);
  };
  const Cmd cmds[] = {
      {"mesh", "build the reconstruction mesh and write mesh.csv", eit::run_mesh},
      {"forward", "synthesize measurement data for a phantom", eit::run_forward},
      {"reconstruct", "full pipeline: data, solve, raster, report", eit::run_reconstruct},
      {"sweep", "reconstruct across a list of regularization parameters", eit::run_sweep},
      {"compare", "one-shot solve vs conjugate-gradient baseline", eit::run_compare},
      {"diagnose", "self-test: spectrum and homogeneous-response checks", eit::run_diagnose},
  };
  for (const Cmd& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    auto opts = add_common(sub);
    auto run = c.run;
    sub->callback([opts, run, &code]() { code = run(resolve(*opts)); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const eit::ParameterError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const eit::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 2;
  }
  return code;
}
