// Command-line front end: GRS boundary sampling, control synthesis runs, and
// the verification suites.  Exit codes: 0 success, 1 synthesis/verification
// failure, 2 usage or configuration error.

#include "grsreach/casestudy.hpp"
#include "grsreach/config.hpp"
#include "grsreach/io.hpp"
#include "grsreach/verify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace {

namespace fs = std::filesystem;
using namespace grsreach;

fs::path output_root(const std::string& flag_value, const std::string& config_value) {
  if (!flag_value.empty()) return flag_value;
  if (!config_value.empty()) return config_value;
  if (const char* env = std::getenv("GRSREACH_OUT"); env != nullptr && *env != '\0')
    return env;
  return "out";
}

struct SystemSetup {
  ControlAffineField field;
  LocalData local;
  ProxyParams proxy;
};

SystemSetup setup_from_config(const RunConfig& cfg) {
  SystemSetup s{make_field(cfg), {}, {}};
  const Vec x0 = Vec::Zero(s.field.state_dim);
  s.local = make_local_data(cfg, s.field, x0);
  s.proxy = derive_proxy(s.local.f_x0, s.local.G_x0, s.local.lipschitz_f, s.local.lipschitz_G);
  s.proxy.origin = x0;
  return s;
}

SystemSetup setup_for_scenario() {
  RunConfig cfg;  // defaults select the quadrotor benchmark
  return setup_from_config(cfg);
}

int cmd_grs(const std::string& config_path, const std::string& scenario, double horizon,
            int samples, const std::string& out_flag) {
  SystemSetup sys;
  std::string out_cfg;
  if (!scenario.empty()) {
    scenario_by_id(scenario[0]);  // validates the id
    sys = setup_for_scenario();
  } else {
    const RunConfig cfg = load_run_config(config_path);
    sys = setup_from_config(cfg);
    out_cfg = cfg.out_dir;
    if (horizon <= 0.0) horizon = cfg.T;
  }
  if (horizon < 0.0) throw ConfigError("grs: horizon must be nonnegative");

  const GrsBoundary boundary = grs_boundary(sys.proxy, horizon, samples);
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  for (const Vec& y : boundary.endpoints) {
    const double r = (y - sys.proxy.origin).norm();
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  if (boundary.size() == 0) rmin = 0.0;

  const fs::path path = output_root(out_flag, out_cfg) / "grs.csv";
  io::write_grs_csv(path, boundary);
  std::cout << "boundary radius min " << io::format_number(rmin) << " max "
            << io::format_number(rmax) << "\n";
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

struct SynthOutcome {
  int exit_code = 0;
  std::string report;
};

SynthOutcome synth_scenario_run(char id, double angle_deg, double horizon,
                                std::optional<Variant> variant, int max_cycles,
                                const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  const ScenarioRun run = run_scenario(id, angle_deg, horizon, variant, 360, max_cycles);
  const double runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path dir = out_dir / std::string(1, id);
  io::write_trajectory_csv(dir / "scenario.csv", run.result.trajectory, run.result.control);
  io::write_grs_csv(dir / "grs.csv", run.boundary);
  io::write_trajectory_csv(dir / "reference.csv", run.reference.trajectory,
                           PiecewiseConstantControl::constant(run.direction, 0.0, horizon));
  io::write_control_csv(dir / "control.csv", run.result.control);
  CycleConfig cycle;
  cycle.dt = run.scenario.dt;
  cycle.eps = run.scenario.eps;
  cycle.k = run.scenario.k;
  cycle.input_dim = 2;
  io::write_diagnostics_json(dir / "diag.json", std::string(1, id), cycle, run.result,
                             runtime);
  io::write_cycle_log(dir / "cycles.jsonl", run.result);

  const bool success = run.result.termination == Termination::target_radius ||
                       run.result.termination == Termination::horizon_reached;
  SynthOutcome out;
  out.exit_code = success ? 0 : 1;
  std::string lines;
  lines += "scenario " + std::string(1, id) + " (" + std::string(to_string(run.variant)) +
           ", angle " + io::format_number(angle_deg) + " deg)\n";
  lines += "  r " + io::format_number(run.result.radius) + "\n";
  lines += "  cycles " + std::to_string(run.result.cycles_executed) + "\n";
  lines += "  final_error " + io::format_number(run.result.final_error) + "\n";
  lines += "  termination " + std::string(to_string(run.result.termination)) + "\n";
  lines += "  max_deviation " + io::format_number(run.max_deviation) + "\n";
  for (const char* name :
       {"scenario.csv", "grs.csv", "reference.csv", "control.csv", "diag.json",
        "cycles.jsonl"})
    lines += "  wrote " + (dir / name).string() + "\n";
  out.report = lines;
  return out;
}

int cmd_synth_config(const std::string& config_path, double angle_flag,
                     const std::string& variant_flag, const std::string& out_flag,
                     int max_cycles_flag) {
  const RunConfig cfg = load_run_config(config_path);
  const SystemSetup sys = setup_from_config(cfg);
  const Vec x0 = sys.proxy.origin;

  const std::string variant_name = variant_flag.empty() ? cfg.variant : variant_flag;
  Variant variant;
  if (variant_name == "algorithm1") variant = Variant::algorithm1;
  else if (variant_name == "algorithm2") variant = Variant::algorithm2;
  else if (variant_name == "auto") variant = recommended_variant(sys.proxy);
  else throw ConfigError("synth: variant must be auto, algorithm1, or algorithm2");

  Vec target;
  if (cfg.y) {
    target = *cfg.y;
  } else {
    const double angle_deg = std::isnan(angle_flag) ? cfg.angle_deg : angle_flag;
    if (sys.proxy.image_dim() != 2)
      throw ConfigError("synth: angle targets need a 2-dimensional input image; give y");
    const double angle = angle_deg * std::numbers::pi / 180.0;
    const Vec direction = std::cos(angle) * sys.proxy.image_basis.col(0).eval() +
                          std::sin(angle) * sys.proxy.image_basis.col(1).eval();
    target = integrate_proxy(sys.proxy, direction, cfg.T).trajectory.back_state();
  }

  SynthesisConfig scfg;
  scfg.target = target;
  scfg.horizon = cfg.T;
  scfg.variant = variant;
  scfg.cycle.dt = cfg.dt;
  scfg.cycle.eps = cfg.eps;
  scfg.cycle.k = cfg.k;
  scfg.cycle.input_dim = sys.field.input_dim;
  scfg.max_cycles = max_cycles_flag > 0 ? max_cycles_flag : cfg.max_cycles;

  PlantSimulator sim(sys.field, x0,
                     GuardRegion::ball(x0, 10.0 * sys.proxy.domain_radius()),
                     cfg.substep_divisor);
  const auto start = std::chrono::steady_clock::now();
  const SynthesisResult result = variant == Variant::algorithm1
                                     ? synthesize(sim, sys.local, scfg)
                                     : synthesize_finite_time(sim, sys.local, scfg);
  const double runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path dir = output_root(out_flag, cfg.out_dir) / "custom";
  io::write_trajectory_csv(dir / "scenario.csv", result.trajectory, result.control);
  io::write_grs_csv(dir / "grs.csv", grs_boundary(sys.proxy, cfg.T, 360));
  io::write_control_csv(dir / "control.csv", result.control);
  io::write_diagnostics_json(dir / "diag.json", "custom", scfg.cycle, result, runtime);
  io::write_cycle_log(dir / "cycles.jsonl", result);

  std::cout << "r " << io::format_number(result.radius) << "\n";
  std::cout << "cycles " << result.cycles_executed << "\n";
  std::cout << "final_error " << io::format_number(result.final_error) << "\n";
  std::cout << "termination " << to_string(result.termination) << "\n";
  for (const char* name : {"scenario.csv", "grs.csv", "control.csv", "diag.json",
                           "cycles.jsonl"})
    std::cout << "wrote " << (dir / name).string() << "\n";
  const bool success = result.termination == Termination::target_radius ||
                       result.termination == Termination::horizon_reached;
  return success ? 0 : 1;
}

int cmd_synth(const std::string& config_path, const std::string& scenario, double angle,
              const std::string& variant_name, const std::string& out_flag, int jobs,
              int max_cycles) {
  if (!config_path.empty()) return cmd_synth_config(config_path, angle, variant_name,
                                                    out_flag, max_cycles);

  std::optional<Variant> variant;
  if (variant_name == "algorithm1") variant = Variant::algorithm1;
  else if (variant_name == "algorithm2") variant = Variant::algorithm2;
  else if (!variant_name.empty() && variant_name != "auto")
    throw ConfigError("synth: variant must be auto, algorithm1, or algorithm2");

  const fs::path out_dir = output_root(out_flag, "");
  const double angle_deg = std::isnan(angle) ? 30.0 : angle;
  const int limit = max_cycles > 0 ? max_cycles : 100000;

  std::vector<char> ids;
  if (scenario == "all") ids = {'A', 'B', 'C', 'D'};
  else {
    scenario_by_id(scenario[0]);
    ids = {scenario[0]};
  }

  std::vector<SynthOutcome> outcomes(ids.size());
  if (jobs > 1 && ids.size() > 1) {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs && t < static_cast<int>(ids.size()); ++t) {
      pool.emplace_back([&, t]() {
        for (std::size_t i = static_cast<std::size_t>(t); i < ids.size();
             i += static_cast<std::size_t>(jobs))
          outcomes[i] = synth_scenario_run(ids[i], angle_deg, 0.25, variant, limit, out_dir);
      });
    }
    for (auto& th : pool) th.join();
  } else {
    for (std::size_t i = 0; i < ids.size(); ++i)
      outcomes[i] = synth_scenario_run(ids[i], angle_deg, 0.25, variant, limit, out_dir);
  }

  int exit_code = 0;
  for (const SynthOutcome& o : outcomes) {
    std::cout << o.report;
    exit_code = std::max(exit_code, o.exit_code);
  }
  return exit_code;
}

int cmd_verify(const std::string& suite, bool corrupt) {
  VerifyTolerances tol;
  if (corrupt) tol = tol.corrupt();
  const auto results = verify_suite(suite, tol);
  std::size_t width = 0;
  for (const CheckResult& r : results) width = std::max(width, r.name.size());
  for (const CheckResult& r : results) {
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name
              << std::string(width - r.name.size() + 2, ' ') << r.detail << "\n";
  }
  return all_pass(results) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"guaranteed-reachability control synthesis"};
  app.require_subcommand(1);

  std::string grs_config, grs_scenario, grs_out;
  double grs_T = -1.0;
  int grs_samples = 360;
  auto* grs = app.add_subcommand("grs", "sample the guaranteed reachable set boundary");
  auto* grs_cfg_opt = grs->add_option("--config", grs_config, "run configuration file");
  grs->add_option("--scenario", grs_scenario, "benchmark scenario id (A-D)")
      ->check(CLI::IsMember({"A", "B", "C", "D"}))
      ->excludes(grs_cfg_opt);
  grs->add_option("--T", grs_T, "horizon in seconds (default 0.25 or the config value)");
  grs->add_option("--samples", grs_samples, "boundary directions (minimum 8)")
      ->check(CLI::Range(8, 1000000));
  grs->add_option("--out", grs_out, "output directory");

  std::string synth_config, synth_scenario, synth_variant, synth_out;
  double synth_angle = std::numeric_limits<double>::quiet_NaN();
  int synth_jobs = 1, synth_max_cycles = 0;
  auto* synth = app.add_subcommand("synth", "synthesize a control run");
  auto* synth_cfg_opt = synth->add_option("--config", synth_config, "run configuration file");
  synth->add_option("--scenario", synth_scenario, "benchmark scenario id (A-D) or 'all'")
      ->check(CLI::IsMember({"A", "B", "C", "D", "all"}))
      ->excludes(synth_cfg_opt);
  synth->add_option("--angle", synth_angle, "boundary target angle in degrees");
  synth->add_option("--variant", synth_variant, "auto, algorithm1, or algorithm2")
      ->check(CLI::IsMember({"auto", "algorithm1", "algorithm2"}));
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--jobs", synth_jobs, "concurrent runs for --scenario all")
      ->check(CLI::Range(1, 64));
  synth->add_option("--max-cycles", synth_max_cycles, "cycle budget override");

  std::string verify_suite_name = "all";
  bool verify_corrupt = false;
  auto* verify = app.add_subcommand("verify", "run the property suites");
  verify->add_option("--suite", verify_suite_name, "proxy, learner, synth, casestudy, all")
      ->check(CLI::IsMember({"proxy", "learner", "synth", "casestudy", "all"}));
  verify->add_flag("--corrupt-tolerances", verify_corrupt)->group("");  // test hook

  try {
    app.parse(argc, argv);
    if (grs->parsed()) {
      if (grs_config.empty() && grs_scenario.empty())
        throw ConfigError("grs: give --scenario or --config");
      return cmd_grs(grs_config, grs_scenario, grs_T, grs_samples, grs_out);
    }
    if (synth->parsed()) {
      if (synth_config.empty() && synth_scenario.empty())
        throw ConfigError("synth: give --scenario or --config");
      return cmd_synth(synth_config, synth_scenario, synth_angle, synth_variant, synth_out,
                       synth_jobs, synth_max_cycles);
    }
    if (verify->parsed()) return cmd_verify(verify_suite_name, verify_corrupt);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
