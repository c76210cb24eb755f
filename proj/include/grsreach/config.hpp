#pragma once

// Flat key = value run configuration.  One assignment per line, '#' starts a
// comment, vectors and matrices are whitespace-separated numbers (row-major
// for matrices).  Unknown keys and non-finite numbers are rejected.  Every
// optional key has a documented default (see the README).

#include "grsreach/casestudy.hpp"
#include "grsreach/core.hpp"
#include "grsreach/synthesizer.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace grsreach {

struct ConfigError : Error {
  using Error::Error;
};

struct RunConfig {
  // system selection
  std::string system = "quadrotor";  // "quadrotor" or "affine"
  int d = 2;
  int m = 2;
  std::optional<Vec> f0;  // affine: f(x) = f0 + A x
  std::optional<Mat> A;   // affine drift slope, d x d (default zero)
  std::optional<Mat> G;   // affine: constant input matrix, d x m
  double L_f = 1.0;
  double L_G = 1.0;
  double propeller_mass = 0.01;  // quadrotor only

  // local data at x0 = 0; defaults probe the selected system
  std::optional<Vec> f_x0;
  std::optional<Mat> G_x0;

  // learn-control cycle
  double dt = 1e-4;
  double eps = 0.005;
  double k = 5.0;

  // run
  double T = 0.25;
  std::string variant = "auto";  // auto, algorithm1, algorithm2
  double angle_deg = 30.0;
  std::optional<Vec> y;  // explicit target overrides angle_deg
  int max_cycles = 100000;
  int substep_divisor = 20;
  std::string out_dir;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline double parse_finite(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' has non-numeric value '" + value + "'");
  }
  if (trim(value.substr(used)) != "")
    throw ConfigError("config: trailing characters after number for key '" + key + "'");
  if (!std::isfinite(v))
    throw ConfigError("config: key '" + key + "' must be finite");
  return v;
}

inline int parse_int(const std::string& key, const std::string& value) {
  const double v = parse_finite(key, value);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw ConfigError("config: key '" + key + "' must be an integer");
  return i;
}

inline std::vector<double> parse_numbers(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  std::vector<double> out;
  std::string token;
  while (in >> token) out.push_back(parse_finite(key, token));
  if (out.empty()) throw ConfigError("config: key '" + key + "' needs numeric entries");
  return out;
}

inline Vec parse_vec(const std::string& key, const std::string& value) {
  const auto numbers = parse_numbers(key, value);
  Vec v(static_cast<Eigen::Index>(numbers.size()));
  for (std::size_t i = 0; i < numbers.size(); ++i) v(static_cast<Eigen::Index>(i)) = numbers[i];
  return v;
}

inline Mat reshape_row_major(const std::string& key, const std::vector<double>& numbers,
                             int rows, int cols) {
  if (static_cast<int>(numbers.size()) != rows * cols)
    throw ConfigError("config: key '" + key + "' expects " + std::to_string(rows * cols) +
                      " entries (" + std::to_string(rows) + "x" + std::to_string(cols) + ")");
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      m(r, c) = numbers[static_cast<std::size_t>(r * cols + c)];
  return m;
}

}  // namespace detail

inline RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  // matrices are parsed after all keys are read so d and m may appear in any
  // order relative to them
  std::optional<std::string> raw_A, raw_G, raw_G_x0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (value.empty())
      throw ConfigError("config: key '" + key + "' has an empty value");

    if (key == "system") cfg.system = value;
    else if (key == "d") cfg.d = detail::parse_int(key, value);
    else if (key == "m") cfg.m = detail::parse_int(key, value);
    else if (key == "f0") cfg.f0 = detail::parse_vec(key, value);
    else if (key == "A") raw_A = value;
    else if (key == "G") raw_G = value;
    else if (key == "L_f") cfg.L_f = detail::parse_finite(key, value);
    else if (key == "L_G") cfg.L_G = detail::parse_finite(key, value);
    else if (key == "propeller_mass") cfg.propeller_mass = detail::parse_finite(key, value);
    else if (key == "f_x0") cfg.f_x0 = detail::parse_vec(key, value);
    else if (key == "G_x0") raw_G_x0 = value;
    else if (key == "dt") cfg.dt = detail::parse_finite(key, value);
    else if (key == "eps") cfg.eps = detail::parse_finite(key, value);
    else if (key == "k") cfg.k = detail::parse_finite(key, value);
    else if (key == "T") cfg.T = detail::parse_finite(key, value);
    else if (key == "variant") cfg.variant = value;
    else if (key == "angle_deg") cfg.angle_deg = detail::parse_finite(key, value);
    else if (key == "y") cfg.y = detail::parse_vec(key, value);
    else if (key == "max_cycles") cfg.max_cycles = detail::parse_int(key, value);
    else if (key == "substep_divisor") cfg.substep_divisor = detail::parse_int(key, value);
    else if (key == "out_dir") cfg.out_dir = value;
    else
      throw ConfigError("config: unknown key '" + key + "'");
  }
  if (raw_A) cfg.A = detail::reshape_row_major("A", detail::parse_numbers("A", *raw_A), cfg.d, cfg.d);
  if (raw_G) cfg.G = detail::reshape_row_major("G", detail::parse_numbers("G", *raw_G), cfg.d, cfg.m);
  if (raw_G_x0)
    cfg.G_x0 = detail::reshape_row_major("G_x0", detail::parse_numbers("G_x0", *raw_G_x0),
                                         cfg.d, cfg.m);
  if (cfg.variant != "auto" && cfg.variant != "algorithm1" && cfg.variant != "algorithm2")
    throw ConfigError("config: variant must be auto, algorithm1, or algorithm2");
  if (cfg.system != "quadrotor" && cfg.system != "affine")
    throw ConfigError("config: system must be quadrotor or affine");
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path);
  return parse_run_config(in);
}

/// Build the plant selected by the configuration.
inline ControlAffineField make_field(const RunConfig& cfg) {
  if (cfg.system == "quadrotor") {
    QuadrotorParams q;
    q.propeller_mass = cfg.propeller_mass;
    return build_quadrotor(q);
  }
  if (!cfg.G) throw ConfigError("config: affine system needs the G matrix");
  ControlAffineField field;
  field.state_dim = cfg.d;
  field.input_dim = cfg.m;
  const Vec f0 = cfg.f0.value_or(Vec::Zero(cfg.d));
  const Mat slope = cfg.A.value_or(Mat::Zero(cfg.d, cfg.d));
  if (f0.size() != cfg.d || slope.rows() != cfg.d)
    throw ConfigError("config: f0/A dimensions must match d");
  const Mat g = *cfg.G;
  field.f = [f0, slope](const Vec& x) { return Vec(f0 + slope * x); };
  field.G = [g](const Vec&) { return g; };
  field.lipschitz_f = cfg.L_f;
  field.lipschitz_G = cfg.L_G;
  return field;
}

/// Local data at x0, honoring explicit overrides.
inline LocalData make_local_data(const RunConfig& cfg, const ControlAffineField& field,
                                 const Vec& x0) {
  LocalData local = LocalData::probe(field, x0);
  if (cfg.f_x0) local.f_x0 = *cfg.f_x0;
  if (cfg.G_x0) local.G_x0 = *cfg.G_x0;
  local.lipschitz_f = cfg.L_f;
  local.lipschitz_G = cfg.L_G;
  if (local.f_x0.size() != field.state_dim || local.G_x0.rows() != field.state_dim ||
      local.G_x0.cols() != field.input_dim)
    throw ConfigError("config: local data dimensions must match the system");
  return local;
}

}  // namespace grsreach
