// File formats: history CSV (one EnergySample per row, shortest round-trip
// decimals so golden files are byte-stable), Field and FlowState JSON, and
// small helpers shared by the runner.
#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "pflow/energy.hpp"
#include "pflow/grid.hpp"

namespace pflow {

// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::runtime_error("parse_double: bad number '" + std::string(s) + "'");
  return v;
}

inline constexpr const char* kHistoryHeader =
    "t,E_total,E_dirichlet,kinetic,error_term,w1p_err,lp_err,sup_err,l2_ut,grad_lp,dt_current";

inline std::string history_csv_row(const EnergySample& s) {
  std::string row;
  row.reserve(160);
  row += format_double(s.t);
  for (double v : {s.total, s.dirichlet, s.kinetic, s.error_term, s.w1p_err, s.lp_err,
                   s.sup_err, s.l2_ut, s.grad_lp, s.dt_current}) {
    row += ',';
    row += format_double(v);
  }
  return row;
}

inline void write_history_csv(const std::filesystem::path& path,
                              const std::vector<EnergySample>& samples) {
  std::ofstream out(path, std::ios::binary);  // binary: no platform newline games
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << kHistoryHeader << '\n';
  for (const EnergySample& s : samples) out << history_csv_row(s) << '\n';
}

inline std::vector<EnergySample> read_history_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHistoryHeader)
    throw std::runtime_error(path.string() + ": unexpected CSV header");
  std::vector<EnergySample> samples;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::string_view sv = line;
    size_t start = 0;
    for (size_t i = 0; i <= sv.size(); ++i) {
      if (i == sv.size() || sv[i] == ',') {
        cells.push_back(sv.substr(start, i - start));
        start = i + 1;
      }
    }
    if (cells.size() != 11)
      throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    EnergySample s;
    s.t = parse_double(cells[0]);
    s.total = parse_double(cells[1]);
    s.dirichlet = parse_double(cells[2]);
    s.kinetic = parse_double(cells[3]);
    s.error_term = parse_double(cells[4]);
    s.w1p_err = parse_double(cells[5]);
    s.lp_err = parse_double(cells[6]);
    s.sup_err = parse_double(cells[7]);
    s.l2_ut = parse_double(cells[8]);
    s.grad_lp = parse_double(cells[9]);
    s.dt_current = parse_double(cells[10]);
    samples.push_back(s);
  }
  return samples;
}

// Field <-> JSON: grid descriptor plus flat row-major value array.
inline nlohmann::json field_to_json(const Field& f) {
  const Grid& g = *f.grid;
  nlohmann::json j;
  j["grid"]["dim"] = g.dim;
  j["grid"]["nodes_per_axis"] =
      g.dim == 1 ? std::vector<int>{g.nodes[0]} : std::vector<int>{g.nodes[0], g.nodes[1]};
  j["grid"]["axis_lengths"] = g.dim == 1 ? std::vector<double>{g.lengths[0]}
                                         : std::vector<double>{g.lengths[0], g.lengths[1]};
  j["values"] = f.values;
  return j;
}

inline Field field_from_json(const nlohmann::json& j) {
  const auto& jg = j.at("grid");
  GridPtr grid = build_grid(jg.at("dim").get<int>(), jg.at("nodes_per_axis").get<std::vector<int>>(),
                            jg.at("axis_lengths").get<std::vector<double>>());
  Field f(grid, j.at("values").get<std::vector<double>>());
  if (!f.all_finite()) throw std::runtime_error("field JSON contains non-finite values");
  return f;
}

inline nlohmann::json flow_state_to_json(const FlowState& s) {
  nlohmann::json j;
  j["t"] = s.t;
  j["u"] = field_to_json(s.u);
  j["ut"] = field_to_json(s.ut);
  return j;
}

inline FlowState flow_state_from_json(const nlohmann::json& j) {
  FlowState s;
  s.t = j.at("t").get<double>();
  s.u = field_from_json(j.at("u"));
  s.ut = field_from_json(j.at("ut"));
  return s;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

}  // namespace pflow
