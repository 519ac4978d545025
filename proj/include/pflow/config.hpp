// Experiment configuration: a single JSON file with nested keys describing
// the grid, the exponent and damping, boundary and initial presets, the
// integrator, and optional sweep lists. Presets rather than expression
// strings keep runs reproducible; randomized presets require a seed.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pflow/analysis.hpp"
#include "pflow/evolution.hpp"
#include "pflow/grid.hpp"
#include "pflow/stationary.hpp"

namespace pflow {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  int dim = 1;
  std::vector<int> nodes{201};
  std::vector<double> lengths{1.0};
};

struct BoundarySpec {
  std::string preset = "linear_x";  // zero | constant | linear_x | xx_minus_yy
  double value = 0.0;               // for "constant"
};

struct InitialSpec {
  std::string preset = "linear_plus_sine";  // interp_g | linear_plus_sine | random_bump
  double amplitude = 1.0;
  int modes = 1;
  std::optional<std::uint32_t> seed;  // required by random_bump
};

struct StationarySpec {
  double tol = 1e-10;
  int max_iter = 50000;
};

struct AnalysisSpec {
  std::optional<TimeWindow> window;  // defaults derived from p and t_final
  std::string column = "w1p_err";
};

struct ExperimentConfig {
  GridSpec grid;
  double p = 2.0;
  double a = 1.0;
  BoundarySpec boundary;
  InitialSpec initial;
  IntegratorConfig integrator;
  StationarySpec stationary;
  AnalysisSpec analysis;
  std::string output_dir = "out";
  std::vector<double> sweep_p;
  std::vector<double> sweep_a;
};

namespace detail {

inline FlowMode mode_from_name(const std::string& name) {
  if (name == "damped_second_order") return FlowMode::damped_second_order;
  if (name == "first_order") return FlowMode::first_order;
  throw ConfigError("integrator.mode must be damped_second_order or first_order, got '" +
                    name + "'");
}

inline const char* mode_name(FlowMode m) {
  return m == FlowMode::damped_second_order ? "damped_second_order" : "first_order";
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  std::vector<std::string> errors;
  ExperimentConfig cfg;
  try {
    if (j.contains("grid")) {
      const auto& jg = j.at("grid");
      cfg.grid.dim = jg.value("dim", 1);
      if (jg.contains("nodes")) cfg.grid.nodes = jg.at("nodes").get<std::vector<int>>();
      if (jg.contains("lengths"))
        cfg.grid.lengths = jg.at("lengths").get<std::vector<double>>();
    }
    cfg.p = j.value("p", 2.0);
    cfg.a = j.value("a", 1.0);
    if (j.contains("boundary")) {
      const auto& jb = j.at("boundary");
      cfg.boundary.preset = jb.value("preset", cfg.boundary.preset);
      cfg.boundary.value = jb.value("value", 0.0);
    }
    if (j.contains("initial")) {
      const auto& ji = j.at("initial");
      cfg.initial.preset = ji.value("preset", cfg.initial.preset);
      cfg.initial.amplitude = ji.value("amplitude", 1.0);
      cfg.initial.modes = ji.value("modes", 1);
      if (ji.contains("seed")) cfg.initial.seed = ji.at("seed").get<std::uint32_t>();
    }
    if (j.contains("integrator")) {
      const auto& jt = j.at("integrator");
      if (jt.contains("mode")) cfg.integrator.mode = detail::mode_from_name(jt.at("mode"));
      cfg.integrator.dt_safety = jt.value("dt_safety", cfg.integrator.dt_safety);
      cfg.integrator.t_final = jt.value("t_final", cfg.integrator.t_final);
      cfg.integrator.t_min = jt.value("t_min", cfg.integrator.t_min);
      cfg.integrator.sample_count = jt.value("samples", cfg.integrator.sample_count);
      cfg.integrator.checkpoint_every =
          jt.value("checkpoint_every", cfg.integrator.checkpoint_every);
    }
    if (j.contains("stationary")) {
      cfg.stationary.tol = j.at("stationary").value("tol", cfg.stationary.tol);
      cfg.stationary.max_iter = j.at("stationary").value("max_iter", cfg.stationary.max_iter);
    }
    if (j.contains("analysis")) {
      const auto& ja = j.at("analysis");
      if (ja.contains("window")) {
        auto w = ja.at("window").get<std::vector<double>>();
        if (w.size() != 2 || !(w[0] < w[1]))
          errors.push_back("analysis.window must be [t_lo, t_hi] with t_lo < t_hi");
        else
          cfg.analysis.window = TimeWindow{w[0], w[1]};
      }
      cfg.analysis.column = ja.value("column", cfg.analysis.column);
    }
    if (j.contains("output")) cfg.output_dir = j.at("output").value("dir", cfg.output_dir);
    if (j.contains("sweep")) {
      const auto& js = j.at("sweep");
      if (js.contains("p")) cfg.sweep_p = js.at("p").get<std::vector<double>>();
      if (js.contains("a")) cfg.sweep_a = js.at("a").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }

  // validation
  if (cfg.grid.dim != 1 && cfg.grid.dim != 2) errors.push_back("grid.dim must be 1 or 2");
  if (static_cast<int>(cfg.grid.nodes.size()) != cfg.grid.dim ||
      static_cast<int>(cfg.grid.lengths.size()) != cfg.grid.dim)
    errors.push_back("grid.nodes and grid.lengths must have one entry per axis");
  for (int n : cfg.grid.nodes)
    if (n < 3) errors.push_back("grid.nodes entries must be >= 3");
  for (double L : cfg.grid.lengths)
    if (!(L > 0.0)) errors.push_back("grid.lengths entries must be positive");
  if (!(cfg.p >= 2.0)) errors.push_back("p must be >= 2");
  if (!(cfg.a > 0.0)) errors.push_back("a must be positive");
  if (cfg.boundary.preset != "zero" && cfg.boundary.preset != "constant" &&
      cfg.boundary.preset != "linear_x" && cfg.boundary.preset != "xx_minus_yy")
    errors.push_back("unknown boundary preset '" + cfg.boundary.preset + "'");
  if (cfg.initial.preset != "interp_g" && cfg.initial.preset != "linear_plus_sine" &&
      cfg.initial.preset != "random_bump")
    errors.push_back("unknown initial preset '" + cfg.initial.preset + "'");
  if (cfg.initial.preset == "random_bump" && !cfg.initial.seed)
    errors.push_back("initial.seed is required for the random_bump preset");
  if (cfg.initial.modes < 1) errors.push_back("initial.modes must be >= 1");
  if (!(cfg.integrator.dt_safety > 0.0 && cfg.integrator.dt_safety <= 1.0))
    errors.push_back("integrator.dt_safety must lie in (0,1]");
  if (!(cfg.integrator.t_final > cfg.integrator.t_min && cfg.integrator.t_min > 0.0))
    errors.push_back("integrator needs t_final > t_min > 0");
  if (cfg.integrator.sample_count < 1) errors.push_back("integrator.samples must be >= 1");
  if (cfg.integrator.checkpoint_every < 0)
    errors.push_back("integrator.checkpoint_every must be >= 0");
  if (!(cfg.stationary.tol > 0.0)) errors.push_back("stationary.tol must be positive");
  if (cfg.stationary.max_iter < 1) errors.push_back("stationary.max_iter must be >= 1");
  try {
    column_from_name(cfg.analysis.column);
  } catch (const std::invalid_argument& e) {
    errors.push_back(e.what());
  }

  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const std::string& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

inline GridPtr make_grid(const GridSpec& spec) {
  return build_grid(spec.dim, spec.nodes, spec.lengths);
}

inline Field make_boundary_field(const GridPtr& grid, const BoundarySpec& spec) {
  if (spec.preset == "zero") return Field(grid, 0.0);
  if (spec.preset == "constant") return Field(grid, spec.value);
  if (spec.preset == "linear_x") return sample_field(grid, [](double x, double) { return x; });
  if (spec.preset == "xx_minus_yy")
    return sample_field(grid, [](double x, double y) { return x * x - y * y; });
  throw ConfigError("unknown boundary preset '" + spec.preset + "'");
}

// All initial presets agree with g on the boundary: the bump factors vanish
// there and the interpolant matches g by construction.
inline Field make_initial_field(const GridPtr& grid, const Field& g, const InitialSpec& spec) {
  Field u = boundary_interpolant(grid, g);
  if (spec.preset == "interp_g") return u;

  std::vector<double> coeff(spec.modes, 0.0);
  if (spec.preset == "linear_plus_sine") {
    for (int k = 0; k < spec.modes; ++k) coeff[k] = spec.amplitude / (k + 1);
  } else if (spec.preset == "random_bump") {
    std::mt19937 rng(*spec.seed);
    std::uniform_real_distribution<double> c(-1.0, 1.0);
    for (int k = 0; k < spec.modes; ++k)
      coeff[k] = spec.amplitude * c(rng) / ((k + 1) * (k + 1));
  } else {
    throw ConfigError("unknown initial preset '" + spec.preset + "'");
  }

  double Lx = grid->lengths[0];
  if (grid->dim == 1) {
    for (int i = 0; i < grid->node_count(); ++i) {
      double x = grid->x(i);
      for (int k = 0; k < spec.modes; ++k)
        u[i] += coeff[k] * std::sin((k + 1) * M_PI * x / Lx);
    }
  } else {
    double Ly = grid->lengths[1];
    for (int i = 0; i < grid->node_count(); ++i) {
      double x = grid->x(i), y = grid->y(i);
      for (int k = 0; k < spec.modes; ++k)
        u[i] += coeff[k] * std::sin((k + 1) * M_PI * x / Lx) * std::sin((k + 1) * M_PI * y / Ly);
    }
  }
  return u;
}

// Problem identity: everything that defines (grid, p, g, u0) but not the
// damping or the flow mode, so first-order and damped runs of one problem
// share a fingerprint. FNV-1a over the canonical description.
inline std::string problem_fingerprint(const ExperimentConfig& cfg) {
  std::string desc = "dim=" + std::to_string(cfg.grid.dim);
  for (int n : cfg.grid.nodes) desc += ",n=" + std::to_string(n);
  for (double L : cfg.grid.lengths) desc += ",L=" + std::to_string(L);
  desc += ",p=" + std::to_string(cfg.p);
  desc += ",g=" + cfg.boundary.preset + ":" + std::to_string(cfg.boundary.value);
  desc += ",u0=" + cfg.initial.preset + ":" + std::to_string(cfg.initial.amplitude) + ":" +
          std::to_string(cfg.initial.modes) + ":" +
          (cfg.initial.seed ? std::to_string(*cfg.initial.seed) : "-");
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : desc) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace pflow
