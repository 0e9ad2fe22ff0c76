#include <CLI11.hpp>

#include "casimir_wn/cli.hpp"

using namespace casimir_wn;

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  double rtol = 0.0;    // 0 = keep config value
  double atol = 0.0;
  int cutoff = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_tolerances) {
  cmd->add_option("--config", args.config, "JSON run configuration");
  cmd->add_option("--out", args.out, "output path (overrides config)");
  if (with_tolerances) {
    cmd->add_option("--rtol", args.rtol, "relative tolerance override");
    cmd->add_option("--atol", args.atol, "absolute tolerance override");
    cmd->add_option("--cutoff", args.cutoff, "oracle occupation cutoff override");
  }
}

// 0 = failed to build a config (already logged); caller exits 2
bool build_config(const CommonArgs& args, RunConfig& cfg) {
  try {
    cfg = args.config.empty() ? RunConfig{} : load_config(args.config);
    if (!args.out.empty()) cfg.output_path = args.out;
    if (args.rtol != 0.0) cfg.rtol = args.rtol;
    if (args.atol != 0.0) cfg.atol = args.atol;
    if (args.cutoff != 0) cfg.oracle_cutoff = args.cutoff;
    validate(cfg);
    return true;
  } catch (const std::exception& e) {
    log::error("config: ", e.what());
    return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact evolution engine for a two-mode cavity with an "
               "oscillating boundary"};
  app.require_subcommand(1);

  CommonArgs sim_args, cmp_args, val_args, swp_args;
  std::string sweep_param;
  std::vector<double> sweep_values;
  int sweep_workers = 0;

  CLI::App* sim = app.add_subcommand("simulate", "run the exact pipeline");
  add_common(sim, sim_args, true);

  CLI::App* cmp = app.add_subcommand(
      "compare", "exact pipeline vs truncated-Fock reference");
  add_common(cmp, cmp_args, true);

  CLI::App* val = app.add_subcommand("validate-algebra",
                                     "commutator table self-checks");
  add_common(val, val_args, false);

  CLI::App* swp = app.add_subcommand("sweep", "parameter sweep of simulate");
  add_common(swp, swp_args, true);
  swp->add_option("--param", sweep_param, "omega_d, q0, or phi")->required();
  swp->add_option("--values", sweep_values, "parameter values")
      ->required()
      ->delimiter(',');
  swp->add_option("--workers", sweep_workers,
                  "concurrent runs (default: hardware)");

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) {
    RunConfig cfg;
    if (!build_config(sim_args, cfg)) return 2;
    return cli::cmd_simulate(cfg);
  }
  if (cmp->parsed()) {
    RunConfig cfg;
    if (!build_config(cmp_args, cfg)) return 2;
    return cli::cmd_compare(cfg);
  }
  if (val->parsed()) {
    return cli::cmd_validate_algebra(val_args.out);
  }
  if (swp->parsed()) {
    RunConfig cfg;
    if (!build_config(swp_args, cfg)) return 2;
    return cli::cmd_sweep(cfg, sweep_param, sweep_values, sweep_workers);
  }
  return 0;
}
