#pragma once

// CSV and JSON artifact writers.  All numeric output carries 15 significant
// digits so repeated runs diff cleanly; nothing here embeds timestamps, so
// identical inputs produce byte-identical files (the reported wall-clock
// runtime in the diagnostics JSON is the one intentional exception).

#include "grsreach/casestudy.hpp"
#include "grsreach/core.hpp"
#include "grsreach/proxy.hpp"
#include "grsreach/synthesizer.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace grsreach::io {

struct IoError : Error {
  using Error::Error;
};

/// Decimal formatting with 15 significant digits.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file " + path.string());
  return out;
}

/// Header t,x1,...,xd,u1,...,um with one row per sample.  The input columns
/// hold the piece active at each sample time (right-continuous; the final
/// sample repeats the last piece).
inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                                 const PiecewiseConstantControl& control) {
  std::ofstream out = open_output(path);
  const int d = traj.empty() ? 0 : static_cast<int>(traj.states.front().size());
  const int m = control.input_dim();
  out << "t";
  for (int i = 1; i <= d; ++i) out << ",x" << i;
  for (int i = 1; i <= m; ++i) out << ",u" << i;
  out << "\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << format_number(traj.times[i]);
    for (int j = 0; j < d; ++j) out << "," << format_number(traj.states[i](j));
    if (m > 0) {
      const Vec& u = control.value_at(traj.times[i]);
      for (int j = 0; j < m; ++j) out << "," << format_number(u(j));
    }
    out << "\n";
  }
}

/// Header angle_or_index,y1,...,yd,clamped.  Two-dimensional input images
/// report the direction angle in degrees; otherwise the direction index.
inline void write_grs_csv(const std::filesystem::path& path, const GrsBoundary& boundary) {
  std::ofstream out = open_output(path);
  const int d = boundary.endpoints.empty()
                    ? 0
                    : static_cast<int>(boundary.endpoints.front().size());
  out << "angle_or_index";
  for (int i = 1; i <= d; ++i) out << ",y" << i;
  out << ",clamped\n";
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    if (boundary.image_dim == 2)
      out << format_number(360.0 * static_cast<double>(i) /
                           static_cast<double>(boundary.size()));
    else
      out << i;
    for (int j = 0; j < d; ++j) out << "," << format_number(boundary.endpoints[i](j));
    out << "," << static_cast<int>(boundary.clamped[i]) << "\n";
  }
}

/// Header t_start,t_end,u1,...,um with one row per constant piece.
inline void write_control_csv(const std::filesystem::path& path,
                              const PiecewiseConstantControl& control) {
  std::ofstream out = open_output(path);
  const int m = control.input_dim();
  out << "t_start,t_end";
  for (int i = 1; i <= m; ++i) out << ",u" << i;
  out << "\n";
  for (std::size_t i = 0; i < control.piece_count(); ++i) {
    out << format_number(control.breakpoint(i)) << ","
        << format_number(control.breakpoint(i + 1));
    const Vec& u = control.piece_value(i);
    for (int j = 0; j < m; ++j) out << "," << format_number(u(j));
    out << "\n";
  }
}

inline nlohmann::json to_json(const Vec& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

/// Run summary: scenario tag, tuning parameters, the radius, per-cycle
/// condition status, the waypoint parameters, and the outcome.
inline nlohmann::json diagnostics_json(const std::string& scenario_tag,
                                       const CycleConfig& cycle, const SynthesisResult& result,
                                       double runtime_seconds) {
  nlohmann::json j;
  j["scenario"] = scenario_tag;
  j["params"] = {{"dt", cycle.dt}, {"eps", cycle.eps}, {"k", cycle.k}};
  j["r"] = result.radius;
  nlohmann::json cond = nlohmann::json::array();
  for (const CycleDiagnostics& c : result.cycles) cond.push_back(c.condition_holds);
  j["condition_per_cycle"] = cond;
  nlohmann::json theta = nlohmann::json::array();
  for (const WaypointState& w : result.waypoints) theta.push_back(w.theta);
  j["theta"] = theta;
  j["final_error"] = result.final_error;
  j["termination"] = to_string(result.termination);
  j["gamma"] = result.gamma;
  j["runtime_s"] = runtime_seconds;
  return j;
}

inline void write_diagnostics_json(const std::filesystem::path& path,
                                   const std::string& scenario_tag, const CycleConfig& cycle,
                                   const SynthesisResult& result, double runtime_seconds) {
  std::ofstream out = open_output(path);
  out << diagnostics_json(scenario_tag, cycle, result, runtime_seconds).dump(2) << "\n";
}

/// JSON-lines cycle log: one object per executed cycle with the raw inputs,
/// sampled states, chosen weights, objective, and bound evaluations.
inline void write_cycle_log(const std::filesystem::path& path, const SynthesisResult& result) {
  std::ofstream out = open_output(path);
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const CycleRecord& rec = result.records[i];
    const CycleDiagnostics& diag = result.cycles[i];
    nlohmann::json j;
    j["n"] = rec.index;
    j["tau_n"] = rec.start_time;
    nlohmann::json inputs = nlohmann::json::array();
    for (const Vec& u : rec.inputs) inputs.push_back(to_json(u));
    j["inputs"] = inputs;
    nlohmann::json states = nlohmann::json::array();
    for (const Vec& x : rec.states) states.push_back(to_json(x));
    j["states"] = states;
    j["lambda_star"] = to_json(diag.lambda_star);
    j["objective"] = diag.objective;
    j["bounds"] = {{"C", diag.bound_C_value},
                   {"mu", diag.bound_mu_value},
                   {"condition_lhs", diag.condition_lhs},
                   {"condition_rhs", diag.condition_rhs}};
    out << j.dump() << "\n";
  }
}

}  // namespace grsreach::io
