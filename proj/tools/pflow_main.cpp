// pflow: experiment runner for the damped p-Laplace flow laboratory.
//
//   pflow run <config.json>     solve, evolve, analyze, write artifacts
//   pflow sweep <config.json>   one run per (p, a) pair plus a summary table
//   pflow verify <history.csv>  re-run the analysis on an existing history
//
// Exit codes: 0 pass, 1 config error, 2 invariant violation or failed
// verdict, 3 instability.

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pflow/config.hpp"
#include "pflow/io.hpp"
#include "pflow/runner.hpp"

namespace {

struct Overrides {
  std::string out_dir;
  std::optional<int> samples;
  std::optional<double> t_final;
  std::optional<std::uint32_t> seed;
};

pflow::ExperimentConfig load_config(const std::string& path, const Overrides& ov) {
  nlohmann::json j = pflow::read_json(path);
  pflow::ExperimentConfig cfg = pflow::parse_config(j);
  if (!ov.out_dir.empty()) cfg.output_dir = ov.out_dir;
  if (ov.samples) cfg.integrator.sample_count = *ov.samples;
  if (ov.t_final) cfg.integrator.t_final = *ov.t_final;
  if (ov.seed) cfg.initial.seed = *ov.seed;
  if (ov.samples || ov.t_final) {
    cfg.integrator.validate();
    if (cfg.analysis.window && cfg.analysis.window->t_lo >= cfg.integrator.t_final)
      cfg.analysis.window.reset();
  }
  return cfg;
}

void report_error(int code, const std::string& what, const std::string& out_dir) {
  nlohmann::json j{{"error", what}, {"exit_code", code}};
  std::cerr << j.dump() << "\n";
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (!ec) {
      try {
        pflow::write_json(std::filesystem::path(out_dir) / "error.json", j);
      } catch (...) {
      }
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"damped p-Laplace flow laboratory"};
  app.require_subcommand(1);

  Overrides ov;
  std::string config_path, history_path;

  CLI::App* run = app.add_subcommand("run", "run one experiment from a config file");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--out", ov.out_dir, "output directory (overrides config)");
  run->add_option("--samples", ov.samples, "number of scheduled samples");
  run->add_option("--t-final", ov.t_final, "final time");
  run->add_option("--seed", ov.seed, "seed for randomized presets");

  CLI::App* sweep = app.add_subcommand("sweep", "run every (p, a) pair from the sweep lists");
  sweep->add_option("config", config_path, "experiment config (JSON)")->required();
  sweep->add_option("--out", ov.out_dir, "output directory (overrides config)");
  sweep->add_option("--samples", ov.samples, "number of scheduled samples");
  sweep->add_option("--t-final", ov.t_final, "final time");
  sweep->add_option("--seed", ov.seed, "seed for randomized presets");

  CLI::App* verify = app.add_subcommand("verify", "re-run analysis on an existing history.csv");
  verify->add_option("history", history_path, "path to history.csv")->required();
  verify->add_option("--out", ov.out_dir, "directory for the refreshed verdict");

  CLI11_PARSE(app, argc, argv);
  pflow::Logger log;

  try {
    if (run->parsed()) {
      pflow::ExperimentConfig cfg = load_config(config_path, ov);
      pflow::RunOutcome out = pflow::run_experiment(cfg, log);
      if (out.exit_code != pflow::kExitPass)
        report_error(out.exit_code,
                     out.reasons.empty() ? "run failed" : out.reasons.front(),
                     out.out_dir.string());
      return out.exit_code;
    }
    if (sweep->parsed()) {
      pflow::ExperimentConfig cfg = load_config(config_path, ov);
      pflow::SweepOutcome out = pflow::run_sweep(cfg, log);
      std::cout << "summary: " << out.summary_path.string() << "\n";
      return out.exit_code;
    }
    pflow::RunOutcome out = pflow::verify_history(history_path, ov.out_dir, log);
    if (out.exit_code != pflow::kExitPass)
      report_error(out.exit_code, out.reasons.empty() ? "verify failed" : out.reasons.front(),
                   out.out_dir.string());
    return out.exit_code;
  } catch (const pflow::ConfigError& e) {
    report_error(pflow::kExitConfigError, e.what(), ov.out_dir);
    return pflow::kExitConfigError;
  } catch (const nlohmann::json::exception& e) {
    report_error(pflow::kExitConfigError, std::string("config parse error: ") + e.what(),
                 ov.out_dir);
    return pflow::kExitConfigError;
  } catch (const pflow::InstabilityError& e) {
    report_error(pflow::kExitInstability, e.what(), ov.out_dir);
    return pflow::kExitInstability;
  } catch (const std::exception& e) {
    report_error(pflow::kExitConfigError, e.what(), ov.out_dir);
    return pflow::kExitConfigError;
  }
}
