// qasp: batch driver for randomized adiabatic ground-state preparation
// experiments. Subcommands read a JSON config and emit plot-ready CSV plus
// the resolved config next to the outputs.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "qasp/experiments.hpp"

namespace fs = std::filesystem;
using namespace qasp;

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config = true) {
  auto* opt = cmd->add_option("--config", args.config, "JSON experiment config");
  if (needs_config) opt->required();
  cmd->add_option("--out", args.out, "output directory (default from config)");
  cmd->add_option("--seed", [&args](const std::vector<std::string>& v) {
    args.seed = std::stoull(v.at(0));
    return true;
  }, "seed override");
  cmd->add_option("--threads", [&args](const std::vector<std::string>& v) {
    args.threads = std::stoi(v.at(0));
    return true;
  }, "worker threads (0 = hardware)");
}

cli::RunContext make_context(const CommonArgs& args, const nlohmann::json& cfg) {
  cli::RunContext ctx;
  fs::path config_path(args.config);
  ctx.config_dir = config_path.has_parent_path() ? config_path.parent_path() : fs::path(".");
  std::string out = !args.out.empty()
                        ? args.out
                        : cli::detail::get_or<std::string>(cfg, "out", "qasp_out");
  ctx.out_dir = fs::path(out);
  ctx.seed_override = args.seed;
  ctx.threads_override = args.threads;
  return ctx;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"randomized adiabatic state preparation toolkit"};
  app.require_subcommand(1);

  // ingest
  std::string fcidump_path, ingest_out = "qasp_out", ingest_rule = "z_weight_le_1";
  bool no_reduce = false;
  int electrons_flag = -1;
  auto* ingest = app.add_subcommand("ingest", "FCIDUMP -> Pauli hamiltonian + metadata");
  ingest->add_option("fcidump", fcidump_path, "FCIDUMP file")->required();
  ingest->add_option("--out", ingest_out, "output directory");
  ingest->add_flag("--no-reduce", no_reduce, "skip the particle-number norm reduction");
  ingest->add_option("--electrons", electrons_flag, "override NELEC");
  ingest->add_option("--rule", ingest_rule, "background rule (z_weight_le_1|z_weight_le_2)");

  CommonArgs plan_args, sweep_args, trotter_args, rho_args, measure_args, var_args;
  auto* plan = app.add_subcommand("plan", "closed-form cost report");
  add_common(plan, plan_args);
  auto* sweep = app.add_subcommand("asp-sweep", "E(T) - E_GS over adiabatic times");
  add_common(sweep, sweep_args);
  auto* trotter = app.add_subcommand("trotter-compare", "Trotter ASP vs exact reference");
  add_common(trotter, trotter_args);
  auto* rho = app.add_subcommand("rho-scan", "rho(E) scan with noise and parity filtering");
  add_common(rho, rho_args);
  auto* measure = app.add_subcommand("measure", "ground-state energy estimators");
  add_common(measure, measure_args);
  auto* variance = app.add_subcommand("variance-study", "single-shot estimator variance");
  add_common(variance, var_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (ingest->parsed()) {
      if (!fs::exists(fcidump_path)) {
        std::cerr << "error: no such file: " << fcidump_path << '\n';
        return 2;
      }
      cli::RunContext ctx;
      ctx.out_dir = ingest_out;
      std::optional<int> electrons;
      if (electrons_flag >= 0) electrons = electrons_flag;
      cli::run_ingest(fcidump_path, ctx, !no_reduce, electrons,
                      background_rule_from_string(ingest_rule));
    } else if (plan->parsed()) {
      auto cfg = cli::load_config(plan_args.config);
      cli::run_plan(cfg, make_context(plan_args, cfg));
    } else if (sweep->parsed()) {
      auto cfg = cli::load_config(sweep_args.config);
      cli::run_asp_sweep(cfg, make_context(sweep_args, cfg));
    } else if (trotter->parsed()) {
      auto cfg = cli::load_config(trotter_args.config);
      cli::run_trotter_compare(cfg, make_context(trotter_args, cfg));
    } else if (rho->parsed()) {
      auto cfg = cli::load_config(rho_args.config);
      cli::run_rho_scan(cfg, make_context(rho_args, cfg));
    } else if (measure->parsed()) {
      auto cfg = cli::load_config(measure_args.config);
      cli::run_measure(cfg, make_context(measure_args, cfg));
    } else if (variance->parsed()) {
      auto cfg = cli::load_config(var_args.config);
      cli::run_variance_study(cfg, make_context(var_args, cfg));
    }
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
