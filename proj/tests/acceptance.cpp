// Acceptance suite: exercises the headline guarantees end to end and prints
// one pass/fail line per criterion.  Exit code 0 only when everything holds.

#include "grsreach/casestudy.hpp"
#include "grsreach/io.hpp"
#include "grsreach/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

using namespace grsreach;

namespace {

struct CriterionOutcome {
  bool pass = false;
  std::string detail;
};

struct Clock {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

int main() {
  int failures = 0;
  std::map<std::pair<char, int>, ScenarioRun> runs;  // (scenario, angle) -> run

  auto report = [&](int id, const std::string& label,
                    const std::function<CriterionOutcome()>& body) {
    Clock clock;
    CriterionOutcome outcome;
    try {
      outcome = body();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    if (!outcome.pass) ++failures;
    std::printf("[%s] criterion %d: %s — %s [%.2f s]\n", outcome.pass ? "PASS" : "FAIL", id,
                label.c_str(), outcome.detail.c_str(), clock.seconds());
    std::fflush(stdout);
  };

  report(1, "case-study constants", [&] {
    Clock clock;
    const ControlAffineField field = build_quadrotor();
    const Vec x0 = Vec::Zero(2);
    const LocalData local = LocalData::probe(field, x0);
    const ProxyParams p =
        derive_proxy(local.f_x0, local.G_x0, local.lipschitz_f, local.lipschitz_G);
    const bool b_ok = std::abs(p.gain - 111.11) <= 0.5;
    const bool a_ok = std::abs(p.drift(0) - (-8.73)) <= 0.02 &&
                      std::abs(p.drift(1) - 13.09) <= 0.02;
    const double elapsed = clock.seconds();
    CriterionOutcome out;
    out.pass = b_ok && a_ok && elapsed < 1.0;
    out.detail = "b = " + fmt(p.gain) + ", f(0) = (" + fmt(p.drift(0)) + ", " +
                 fmt(p.drift(1)) + ")";
    return out;
  });

  report(2, "learning radii for scenarios A-D", [&] {
    Clock clock;
    const ControlAffineField field = build_quadrotor();
    const Vec x0 = Vec::Zero(2);
    const LocalData local = LocalData::probe(field, x0);
    const ProxyParams p =
        derive_proxy(local.f_x0, local.G_x0, local.lipschitz_f, local.lipschitz_G);
    bool ok = true;
    std::string detail;
    for (const Scenario& sc : scenarios()) {
      const double raw = learning_radius(p, sc.k, sc.dt, 2, RadiusVariant::raw);
      const double sub =
          learning_radius(p, sc.k, sc.dt, 2, RadiusVariant::drift_subtracted);
      if (std::abs(raw - sc.expected_radius) / sc.expected_radius > 0.15) ok = false;
      if (std::abs(sub - sc.expected_radius) / sc.expected_radius > 0.15) ok = false;
      detail += std::string(1, sc.id) + ": raw " + fmt(raw) + " / sub " + fmt(sub) + "  ";
    }
    const double elapsed = clock.seconds();
    CriterionOutcome out;
    out.pass = ok && elapsed < 5.0;
    out.detail = detail + "(reference 0.18 / 1.11 / 3.48 / 18.83, 15%)";
    return out;
  });

  report(3, "reachability accuracy on boundary targets", [&] {
    bool ok = true;
    std::string detail;
    for (const char id : {'A', 'B'}) {
      const double budget = id == 'A' ? 0.36 : 2.22;  // 2r at the published radii
      for (const double angle : default_target_angles_deg()) {
        Clock per_target;
        ScenarioRun run = run_scenario(id, angle);
        const double elapsed = per_target.seconds();
        const bool reached = run.result.termination == Termination::target_radius &&
                             run.result.final_error <= budget && elapsed < 60.0;
        if (!reached) ok = false;
        detail += std::string(1, id) + "@" + fmt(angle) + ": " +
                  fmt(run.result.final_error) + "  ";
        runs.emplace(std::make_pair(id, static_cast<int>(angle)), std::move(run));
      }
    }
    CriterionOutcome out;
    out.pass = ok;
    out.detail = detail + "(budgets 0.36 / 2.22)";
    return out;
  });

  report(4, "deviation ordering across scenarios", [&] {
    for (const char id : {'C', 'D'})
      runs.emplace(std::make_pair(id, 30), run_scenario(id, 30.0));
    std::vector<double> deviations;
    std::string detail;
    for (const char id : {'A', 'B', 'C', 'D'}) {
      const double dev = runs.at({id, 30}).max_deviation;
      deviations.push_back(dev);
      detail += std::string(1, id) + ": " + fmt(dev) + "  ";
    }
    bool ordered = true;
    for (std::size_t i = 1; i < deviations.size(); ++i)
      if (!(deviations[i] > deviations[i - 1])) ordered = false;
    CriterionOutcome out;
    out.pass = ordered;
    out.detail = detail + "(strictly increasing)";
    return out;
  });

  report(5, "surrogate property suite", [&] {
    Clock clock;
    const auto results = verify_proxy();
    CriterionOutcome out;
    out.pass = all_pass(results) && clock.seconds() < 10.0;
    std::size_t passed = 0;
    for (const auto& r : results) passed += r.pass ? 1 : 0;
    out.detail = std::to_string(passed) + "/" + std::to_string(results.size()) + " checks";
    for (const auto& r : results)
      if (!r.pass) out.detail += "  FAILED " + r.name + " (" + r.detail + ")";
    return out;
  });

  report(6, "learner property suite", [&] {
    Clock clock;
    const auto results = verify_learner();
    CriterionOutcome out;
    out.pass = all_pass(results) && clock.seconds() < 30.0;
    std::size_t passed = 0;
    for (const auto& r : results) passed += r.pass ? 1 : 0;
    out.detail = std::to_string(passed) + "/" + std::to_string(results.size()) + " checks";
    for (const auto& r : results)
      if (!r.pass) out.detail += "  FAILED " + r.name + " (" + r.detail + ")";
    return out;
  });

  report(7, "waypoint chain on every completed run", [&] {
    bool ok = true;
    std::size_t transitions = 0;
    for (const auto& [key, run] : runs) {
      const double r = run.result.radius;
      const auto& wps = run.result.waypoints;
      for (std::size_t i = 1; i < wps.size(); ++i) {
        ++transitions;
        if (!(wps[i].theta > wps[i - 1].theta)) ok = false;
        const double step = (wps[i].waypoint - wps[i - 1].waypoint).norm();
        const double approach = (wps[i].anchor - wps[i - 1].waypoint).norm();
        if (step < r - approach - 1e-9 * r || step >= 2.0 * r) ok = false;
      }
    }
    CriterionOutcome out;
    out.pass = ok && transitions > 0;
    out.detail = std::to_string(transitions) + " accepted transitions across " +
                 std::to_string(runs.size()) + " runs";
    return out;
  });

  report(8, "decrease condition reported, never enforced", [&] {
    const ScenarioRun& run = runs.at({'D', 30});
    bool finite_sides = !run.result.cycles.empty();
    bool any_holds = false;
    for (const CycleDiagnostics& c : run.result.cycles) {
      if (!std::isfinite(c.condition_lhs) || !std::isfinite(c.condition_rhs))
        finite_sides = false;
      any_holds |= c.condition_holds;
    }
    const bool proceeded = run.result.cycles_executed >= 1 &&
                           run.result.termination == Termination::target_radius;
    CriterionOutcome out;
    out.pass = finite_sides && proceeded;
    out.detail = std::string("condition ") + (any_holds ? "held" : "failed") +
                 " under conservative constants; run still completed (" +
                 std::to_string(run.result.cycles_executed) + " cycles)";
    return out;
  });

  if (failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", failures);
  return 1;
}
