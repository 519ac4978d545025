// Experiment orchestration: stationary solve, evolution, analysis, verdict.
//
// A run writes into its output directory:
//   history.csv     one EnergySample per scheduled sample time
//   u_star.json     the stationary solution (field + solver metadata)
//   meta.json       problem fingerprint, initial diagnostics, floors, windows
//   verdict.json    fits, ode check, flags, verdict and exit code
//   checkpoint_*.json  FlowState dumps when enabled
//
// Exit codes: 0 run passed (or was inconclusive), 1 config error,
// 2 invariant violation or a failed rate verdict, 3 instability.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pflow/analysis.hpp"
#include "pflow/config.hpp"
#include "pflow/evolution.hpp"
#include "pflow/io.hpp"
#include "pflow/stationary.hpp"

namespace pflow {

enum ExitCode : int {
  kExitPass = 0,
  kExitConfigError = 1,
  kExitInvariantViolation = 2,
  kExitInstability = 3,
};

// Log level comes from the PFLOW_LOG environment variable: quiet|info|debug.
class Logger {
 public:
  Logger() {
    if (const char* env = std::getenv("PFLOW_LOG")) {
      std::string v = env;
      if (v == "quiet") level_ = 0;
      else if (v == "debug") level_ = 2;
    }
  }
  void info(const std::string& msg) const { emit(1, msg); }
  void debug(const std::string& msg) const { emit(2, msg); }

 private:
  void emit(int lvl, const std::string& msg) const {
    if (level_ >= lvl) {
      static std::mutex mu;
      std::lock_guard<std::mutex> lock(mu);
      std::cerr << msg << "\n";
    }
  }
  int level_ = 1;
};

struct RunOutcome {
  int exit_code = kExitPass;
  std::string verdict = "pass";  // pass | fail | inconclusive
  std::vector<std::string> reasons;
  std::vector<std::string> flags;
  RunHistory history;
  StationaryResult stationary;
  nlohmann::json verdict_json;
  std::filesystem::path out_dir;
};

namespace detail {

inline nlohmann::json fit_to_json(const DecayFit& fit, const std::string& column) {
  return {{"model", fit.model == DecayFit::Model::algebraic ? "algebraic" : "exponential"},
          {"column", column},
          {"window", {fit.t_lo, fit.t_hi}},
          {"slope", fit.slope},
          {"intercept", fit.intercept},
          {"r2", fit.r2},
          {"n_points", fit.n_points}};
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["grid"] = {{"dim", cfg.grid.dim}, {"nodes", cfg.grid.nodes}, {"lengths", cfg.grid.lengths}};
  j["p"] = cfg.p;
  j["a"] = cfg.a;
  j["boundary"] = {{"preset", cfg.boundary.preset}, {"value", cfg.boundary.value}};
  j["initial"] = {{"preset", cfg.initial.preset},
                  {"amplitude", cfg.initial.amplitude},
                  {"modes", cfg.initial.modes}};
  if (cfg.initial.seed) j["initial"]["seed"] = *cfg.initial.seed;
  j["integrator"] = {{"mode", mode_name(cfg.integrator.mode)},
                     {"dt_safety", cfg.integrator.dt_safety},
                     {"t_final", cfg.integrator.t_final},
                     {"t_min", cfg.integrator.t_min},
                     {"samples", cfg.integrator.sample_count},
                     {"checkpoint_every", cfg.integrator.checkpoint_every}};
  j["stationary"] = {{"tol", cfg.stationary.tol}, {"max_iter", cfg.stationary.max_iter}};
  j["analysis"] = {{"column", cfg.analysis.column}};
  if (cfg.analysis.window)
    j["analysis"]["window"] = {cfg.analysis.window->t_lo, cfg.analysis.window->t_hi};
  return j;
}

inline TimeWindow default_window(double p, const IntegratorConfig& integrator) {
  if (p == 2.0) {
    double hi = std::min(40.0, integrator.t_final * 2.0 / 3.0);
    return {std::min(5.0, hi * 0.25), hi};
  }
  double lo = std::max(10.0, 5.0 * integrator.t_min);
  if (lo >= integrator.t_final) lo = integrator.t_min;
  return {lo, integrator.t_final};
}

}  // namespace detail

inline double theorem_bound_exponent(double p) { return -1.0 / ((p - 1.0) * p); }

// Runs one experiment end to end. Throws ConfigError for invalid setups;
// numeric failures are reported through the outcome instead.
inline RunOutcome run_experiment(const ExperimentConfig& cfg, const Logger& log = {}) {
  namespace fs = std::filesystem;
  RunOutcome out;
  out.out_dir = cfg.output_dir;
  fs::create_directories(out.out_dir);

  GridPtr grid = make_grid(cfg.grid);
  PExponent p(cfg.p);
  PParams params(grid, p, cfg.a);
  Field g = make_boundary_field(grid, cfg.boundary);
  Field u0 = make_initial_field(grid, g, cfg.initial);
  std::string fingerprint = problem_fingerprint(cfg);

  log.info("[" + fingerprint + "] stationary solve (p=" + format_double(cfg.p) + ")");
  StationaryResult st = solve_stationary(grid, g, p, cfg.stationary.tol, cfg.stationary.max_iter);
  out.stationary = st;
  nlohmann::json ustar_json = field_to_json(st.u_star);
  ustar_json["meta"] = {{"p", cfg.p},
                        {"tol", cfg.stationary.tol},
                        {"residual", st.residual},
                        {"iterations", st.iterations},
                        {"energy", st.energy},
                        {"converged", st.converged}};
  write_json(out.out_dir / "u_star.json", ustar_json);

  RunHistory& hist = out.history;
  hist.fingerprint = fingerprint;
  hist.mode = detail::mode_name(cfg.integrator.mode);
  hist.p = cfg.p;
  hist.a = cfg.a;
  hist.stationary_residual = st.residual;

  auto fail = [&](int code, const std::string& verdict, const std::string& reason) {
    out.exit_code = code;
    out.verdict = verdict;
    out.reasons.push_back(reason);
  };

  if (!st.converged)
    fail(kExitInvariantViolation, "fail",
         "stationary solve stalled at residual " + format_double(st.residual));

  EvolveResult evo;
  bool evolved = false;
  if (out.exit_code == kExitPass) {
    log.info("[" + fingerprint + "] evolving to t=" + format_double(cfg.integrator.t_final) +
             " (" + hist.mode + ")");
    int every = cfg.integrator.checkpoint_every;
    auto on_sample = [&](int index, const FlowState& state) {
      if (every > 0 && index % every == 0) {
        char name[40];
        std::snprintf(name, sizeof(name), "checkpoint_%04d.json", index);
        write_json(out.out_dir / name, flow_state_to_json(state));
      }
    };
    try {
      evo = evolve(u0, g, st.u_star, params, cfg.integrator, on_sample);
      evolved = true;
      hist.initial = evo.initial;
      hist.grad_lp_initial = evo.initial.grad_lp;
      hist.samples = evo.samples;
      write_history_csv(out.out_dir / "history.csv", hist.samples);
    } catch (const InstabilityError& e) {
      fail(kExitInstability, "fail", e.what());
    }
  }

  // floors: below these levels the history measures solver accuracy
  double floor_w1p = 10.0 * st.residual;
  double floor_e = 10.0 * st.residual * st.residual;

  nlohmann::json meta;
  meta["fingerprint"] = fingerprint;
  meta["config"] = detail::config_to_json(cfg);
  meta["stationary"] = ustar_json["meta"];
  meta["floors"] = {{"w1p_err", floor_w1p}, {"error_term", floor_e}};
  if (evolved) {
    meta["initial"] = {{"E_total", evo.initial.total},
                       {"E_dirichlet", evo.initial.dirichlet},
                       {"error_term", evo.initial.error_term},
                       {"M_grad_lp", evo.initial.grad_lp},
                       {"dt", evo.initial.dt_current}};
    meta["steps"] = evo.steps;
  }

  nlohmann::json verdict;
  verdict["fingerprint"] = fingerprint;
  verdict["p"] = cfg.p;
  verdict["a"] = cfg.a;
  verdict["mode"] = hist.mode;
  verdict["fits"] = nlohmann::json::array();
  verdict["ode_check"] = nullptr;

  if (evolved) {
    HistoryCheck chk = check_history_invariants(hist.samples, hist.initial, hist.grad_lp_initial, cfg.a);
    if (!chk.ok()) {
      for (const auto& v : chk.violations)
        out.reasons.push_back("sample " + std::to_string(v.sample_index) + ": " + v.what);
      fail(kExitInvariantViolation, "fail",
           std::to_string(chk.violations.size()) + " history invariant violations");
    }

    TimeWindow window = cfg.analysis.window ? *cfg.analysis.window
                                            : detail::default_window(cfg.p, cfg.integrator);
    HistoryColumn column = column_from_name(cfg.analysis.column);
    verdict["window"] = {window.t_lo, window.t_hi};

    bool rate_ok = true, rate_known = false;
    try {
      if (cfg.integrator.mode == FlowMode::first_order) {
        DecayFit fit = fit_algebraic(hist.samples, column, window, floor_w1p);
        verdict["fits"].push_back(detail::fit_to_json(fit, cfg.analysis.column));
        out.flags.push_back("first-order baseline: slopes recorded, no rate verdict");
      } else if (cfg.p == 2.0) {
        DecayFit exp_fit = fit_exponential(hist.samples, column, window, floor_w1p);
        DecayFit alg_fit = fit_algebraic(hist.samples, column, window, floor_w1p);
        verdict["fits"].push_back(detail::fit_to_json(exp_fit, cfg.analysis.column));
        verdict["fits"].push_back(detail::fit_to_json(alg_fit, cfg.analysis.column));
        verdict["bound"] = "exp-model";
        rate_known = true;
        rate_ok = exp_fit.slope < 0.0 && exp_fit.r2 >= 0.99 && exp_fit.r2 > alg_fit.r2;
        if (!rate_ok)
          out.reasons.push_back("exponential decay not confirmed: slope " +
                                format_double(exp_fit.slope) + ", r2 " +
                                format_double(exp_fit.r2) + " vs algebraic r2 " +
                                format_double(alg_fit.r2));
      } else {
        DecayFit alg_fit = fit_algebraic(hist.samples, column, window, floor_w1p);
        DecayFit exp_fit = fit_exponential(hist.samples, column, window, floor_w1p);
        verdict["fits"].push_back(detail::fit_to_json(alg_fit, cfg.analysis.column));
        verdict["fits"].push_back(detail::fit_to_json(exp_fit, cfg.analysis.column));
        double bound = theorem_bound_exponent(cfg.p);
        verdict["bound"] = bound;
        rate_known = true;
        rate_ok = alg_fit.slope <= bound + 0.05;
        if (!rate_ok)
          out.reasons.push_back("fitted slope " + format_double(alg_fit.slope) +
                                " decays slower than the bound exponent " +
                                format_double(bound) + " (+0.05 slack)");
        if (exp_fit.r2 > alg_fit.r2)
          out.flags.push_back("exponential-dominant window: exponential r2 exceeds algebraic r2");
      }
    } catch (const FitError& e) {
      out.flags.push_back(e.what());
      if (out.exit_code == kExitPass) out.verdict = "inconclusive";
    }

    if (cfg.integrator.mode == FlowMode::damped_second_order && cfg.p > 2.0) {
      try {
        OdeCheckReport ode = check_error_ode(hist.samples, p, window, floor_e,
                                             hist.grad_lp_initial, cfg.a);
        verdict["ode_check"] = {{"fitted_c", ode.fitted_c},
                                {"fitted_rate", ode.fitted_rate},
                                {"max_violation", ode.max_violation},
                                {"n_points", ode.n_points},
                                {"derivative_bound_ratio", ode.derivative_bound_ratio},
                                {"passes", ode.passes()}};
        if (!ode.passes()) {
          rate_ok = false;
          rate_known = true;
          out.reasons.push_back("error-term ode check: " +
                                format_double(100.0 * ode.max_violation) +
                                "% monotonicity violations");
        }
      } catch (const FitError& e) {
        out.flags.push_back(std::string("ode_check skipped: ") + e.what());
      }
    }

    if (rate_known && !rate_ok && out.exit_code == kExitPass)
      fail(kExitInvariantViolation, "fail", "rate verdict failed");
  }

  verdict["verdict"] = out.verdict;
  verdict["exit_code"] = out.exit_code;
  verdict["reasons"] = out.reasons;
  verdict["flags"] = out.flags;
  verdict["stationary_residual"] = st.residual;
  out.verdict_json = verdict;
  meta["verdict_file"] = "verdict.json";
  write_json(out.out_dir / "meta.json", meta);
  write_json(out.out_dir / "verdict.json", verdict);
  log.info("[" + fingerprint + "] verdict: " + out.verdict +
           " (exit " + std::to_string(out.exit_code) + ")");
  return out;
}

// ---------------------------------------------------------------------------
// Sweep: one run per (p, a) pair in its own subdirectory, executed by a
// small worker pool; the summary is assembled in input order afterwards.

struct SweepRow {
  double p = 0.0, a = 0.0;
  std::string status;  // pass | fail | inconclusive | error
  double fitted_slope = std::numeric_limits<double>::quiet_NaN();
  std::string bound;
};

struct SweepOutcome {
  int exit_code = kExitPass;
  std::vector<SweepRow> rows;
  std::filesystem::path summary_path;
};

inline SweepOutcome run_sweep(const ExperimentConfig& base, const Logger& log = {}) {
  namespace fs = std::filesystem;
  if (base.sweep_p.empty() || base.sweep_a.empty())
    throw ConfigError("sweep requires nonempty sweep.p and sweep.a lists");

  std::vector<std::pair<double, double>> pairs;
  for (double pv : base.sweep_p)
    for (double av : base.sweep_a) {
      bool dup = false;
      for (const auto& q : pairs) dup = dup || (q.first == pv && q.second == av);
      if (dup) {
        log.info("sweep: duplicate pair (p=" + format_double(pv) + ", a=" + format_double(av) +
                 ") skipped");
        continue;
      }
      pairs.emplace_back(pv, av);
    }

  SweepOutcome out;
  out.rows.resize(pairs.size());
  fs::create_directories(base.output_dir);

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t i = next.fetch_add(1); i < pairs.size(); i = next.fetch_add(1)) {
      ExperimentConfig cfg = base;
      cfg.p = pairs[i].first;
      cfg.a = pairs[i].second;
      cfg.sweep_p.clear();
      cfg.sweep_a.clear();
      cfg.output_dir = (fs::path(base.output_dir) /
                        ("p" + format_double(cfg.p) + "_a" + format_double(cfg.a)))
                           .string();
      SweepRow& row = out.rows[i];
      row.p = cfg.p;
      row.a = cfg.a;
      row.bound = cfg.p == 2.0 ? "exp-model" : format_double(theorem_bound_exponent(cfg.p));
      try {
        RunOutcome one = run_experiment(cfg, log);
        row.status = one.verdict;
        for (const auto& fit : one.verdict_json["fits"]) {
          bool algebraic = fit["model"] == "algebraic";
          if ((cfg.p == 2.0 && !algebraic) || (cfg.p > 2.0 && algebraic)) {
            row.fitted_slope = fit["slope"].get<double>();
            break;
          }
        }
      } catch (const std::exception& e) {
        row.status = "error";
        log.info("sweep run (p=" + format_double(cfg.p) + ", a=" + format_double(cfg.a) +
                 ") failed: " + e.what());
      }
    }
  };

  unsigned n_workers = std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                                          static_cast<unsigned>(pairs.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  out.summary_path = fs::path(base.output_dir) / "summary.csv";
  std::ofstream csv(out.summary_path, std::ios::binary);
  csv << "p,a,fitted_slope_w1p,bound_exponent,status\n";
  for (const SweepRow& row : out.rows) {
    csv << format_double(row.p) << ',' << format_double(row.a) << ','
        << (std::isnan(row.fitted_slope) ? "nan" : format_double(row.fitted_slope)) << ','
        << row.bound << ',' << row.status << '\n';
    if (row.status != "pass" && row.status != "inconclusive")
      out.exit_code = kExitInvariantViolation;
  }
  return out;
}

// Re-runs the analysis stage on an existing history.csv; the run's meta.json
// must sit beside it.
inline RunOutcome verify_history(const std::filesystem::path& history_csv,
                                 std::filesystem::path out_dir = {}, const Logger& log = {}) {
  namespace fs = std::filesystem;
  fs::path meta_path = history_csv.parent_path() / "meta.json";
  if (!fs::exists(meta_path))
    throw ConfigError("verify: missing " + meta_path.string() + " next to the history");
  nlohmann::json meta = read_json(meta_path);
  ExperimentConfig cfg = parse_config(meta.at("config"));
  if (out_dir.empty()) out_dir = history_csv.parent_path();

  RunOutcome out;
  out.out_dir = out_dir;
  fs::create_directories(out_dir);
  RunHistory& hist = out.history;
  hist.fingerprint = meta.at("fingerprint").get<std::string>();
  hist.mode = detail::mode_name(cfg.integrator.mode);
  hist.p = cfg.p;
  hist.a = cfg.a;
  hist.stationary_residual = meta.at("stationary").at("residual").get<double>();
  hist.samples = read_history_csv(history_csv);
  if (hist.samples.empty()) throw ConfigError("verify: history has no samples");
  hist.grad_lp_initial = meta.at("initial").at("M_grad_lp").get<double>();
  hist.initial.total = meta.at("initial").at("E_total").get<double>();
  // the velocity starts at zero, so the initial energy is all Dirichlet
  hist.initial.dirichlet = meta.at("initial").value("E_dirichlet", hist.initial.total);
  hist.initial.error_term = meta.at("initial").at("error_term").get<double>();
  hist.initial.grad_lp = hist.grad_lp_initial;

  double floor_w1p = meta.at("floors").at("w1p_err").get<double>();
  double floor_e = meta.at("floors").at("error_term").get<double>();

  nlohmann::json verdict;
  verdict["fingerprint"] = hist.fingerprint;
  verdict["p"] = cfg.p;
  verdict["a"] = cfg.a;
  verdict["mode"] = hist.mode;
  verdict["fits"] = nlohmann::json::array();
  verdict["ode_check"] = nullptr;
  verdict["revalidated_from"] = history_csv.string();

  HistoryCheck chk = check_history_invariants(hist.samples, hist.initial, hist.grad_lp_initial, cfg.a);
  if (!chk.ok()) {
    out.exit_code = kExitInvariantViolation;
    out.verdict = "fail";
    for (const auto& v : chk.violations)
      out.reasons.push_back("sample " + std::to_string(v.sample_index) + ": " + v.what);
  }

  TimeWindow window = cfg.analysis.window ? *cfg.analysis.window
                                          : detail::default_window(cfg.p, cfg.integrator);
  HistoryColumn column = column_from_name(cfg.analysis.column);
  verdict["window"] = {window.t_lo, window.t_hi};
  bool rate_ok = true, rate_known = false;
  try {
    if (cfg.integrator.mode == FlowMode::first_order) {
      DecayFit fit = fit_algebraic(hist.samples, column, window, floor_w1p);
      verdict["fits"].push_back(detail::fit_to_json(fit, cfg.analysis.column));
    } else if (cfg.p == 2.0) {
      DecayFit exp_fit = fit_exponential(hist.samples, column, window, floor_w1p);
      DecayFit alg_fit = fit_algebraic(hist.samples, column, window, floor_w1p);
      verdict["fits"].push_back(detail::fit_to_json(exp_fit, cfg.analysis.column));
      verdict["fits"].push_back(detail::fit_to_json(alg_fit, cfg.analysis.column));
      rate_known = true;
      rate_ok = exp_fit.slope < 0.0 && exp_fit.r2 >= 0.99 && exp_fit.r2 > alg_fit.r2;
    } else {
      DecayFit alg_fit = fit_algebraic(hist.samples, column, window, floor_w1p);
      verdict["fits"].push_back(detail::fit_to_json(alg_fit, cfg.analysis.column));
      rate_known = true;
      rate_ok = alg_fit.slope <= theorem_bound_exponent(cfg.p) + 0.05;
      try {
        OdeCheckReport ode = check_error_ode(hist.samples, PExponent(cfg.p), window, floor_e,
                                             hist.grad_lp_initial, cfg.a);
        verdict["ode_check"] = {{"fitted_c", ode.fitted_c},
                                {"fitted_rate", ode.fitted_rate},
                                {"max_violation", ode.max_violation},
                                {"n_points", ode.n_points},
                                {"passes", ode.passes()}};
        rate_ok = rate_ok && ode.passes();
      } catch (const FitError& e) {
        out.flags.push_back(std::string("ode_check skipped: ") + e.what());
      }
    }
  } catch (const FitError& e) {
    out.flags.push_back(e.what());
    if (out.exit_code == kExitPass) out.verdict = "inconclusive";
  }
  if (rate_known && !rate_ok && out.exit_code == kExitPass) {
    out.exit_code = kExitInvariantViolation;
    out.verdict = "fail";
    out.reasons.push_back("rate verdict failed on re-analysis");
  }

  verdict["verdict"] = out.verdict;
  verdict["exit_code"] = out.exit_code;
  verdict["reasons"] = out.reasons;
  verdict["flags"] = out.flags;
  out.verdict_json = verdict;
  write_json(out_dir / "verdict.json", verdict);
  log.info("verify: " + out.verdict + " (exit " + std::to_string(out.exit_code) + ")");
  return out;
}

}  // namespace pflow
