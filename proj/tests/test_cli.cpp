// End-to-end checks of the command-line tool.  The binary path arrives in
// GRSREACH_BIN (set by the test harness).

#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run_command(const std::string& command) {
  CommandResult result;
  FILE* pipe = popen((command + " 2>&1").c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buffer{};
  while (fgets(buffer.data(), buffer.size(), pipe) != nullptr) result.output += buffer.data();
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string binary() {
  const char* bin = std::getenv("GRSREACH_BIN");
  REQUIRE(bin != nullptr);
  return bin;
}

fs::path scratch(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / "grsreach_cli_test" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("grs writes the boundary ring of the benchmark") {
  const fs::path out = scratch("grs");
  const auto res = run_command(binary() + " grs --scenario A --T 0.25 --samples 360 --out " +
                               out.string());
  CAPTURE(res.output);
  REQUIRE(res.exit_code == 0);
  REQUIRE(res.output.find("boundary radius min") != std::string::npos);
  const std::string csv = slurp(out / "grs.csv");
  REQUIRE(line_count(csv) == 361);  // header + 360 rows

  // radii of the ring stay inside the known annulus
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double angle, y1, y2;
    int clamped;
    row >> angle >> y1 >> y2 >> clamped;
    const double r = std::sqrt(y1 * y1 + y2 * y2);
    REQUIRE(r > 16.0);
    REQUIRE(r < 27.0);
    REQUIRE(clamped == 0);
  }
}

TEST_CASE("grs enforces the minimum sample count") {
  const auto res = run_command(binary() + " grs --scenario A --samples 3");
  REQUIRE(res.exit_code == 2);
}

TEST_CASE("grs at a zero horizon degenerates to the start state") {
  const fs::path out = scratch("grs0");
  const auto res =
      run_command(binary() + " grs --scenario A --T 0 --samples 8 --out " + out.string());
  REQUIRE(res.exit_code == 0);
  std::istringstream in(slurp(out / "grs.csv"));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double angle, y1, y2;
    row >> angle >> y1 >> y2;
    REQUIRE(y1 == 0.0);
    REQUIRE(y2 == 0.0);
  }
}

TEST_CASE("synth runs the tight benchmark scenario to its target") {
  const fs::path out = scratch("synthA");
  const auto res = run_command(binary() + " synth --scenario A --angle 30 --out " +
                               out.string());
  CAPTURE(res.output);
  REQUIRE(res.exit_code == 0);
  const std::smatch m = [&] {
    std::smatch match;
    std::regex_search(res.output, match, std::regex("final_error ([0-9.eE+-]+)"));
    return match;
  }();
  REQUIRE(m.size() == 2);
  REQUIRE(std::stod(m[1]) <= 0.36);

  // every artifact path printed must exist
  std::istringstream lines(res.output);
  std::string line;
  std::size_t artifacts = 0;
  while (std::getline(lines, line)) {
    const auto pos = line.find("wrote ");
    if (pos == std::string::npos) continue;
    const fs::path path = line.substr(pos + 6);
    CAPTURE(path.string());
    REQUIRE(fs::exists(path));
    ++artifacts;
  }
  REQUIRE(artifacts == 6);
  REQUIRE(fs::exists(out / "A" / "scenario.csv"));
  REQUIRE(fs::exists(out / "A" / "diag.json"));
}

TEST_CASE("synth accepts the finite-time variant and logs gamma") {
  const fs::path out = scratch("synthB2");
  const auto res = run_command(binary() + " synth --scenario B --variant algorithm2 --out " +
                               out.string());
  CAPTURE(res.output);
  REQUIRE(res.exit_code == 0);
  const nlohmann::json diag = nlohmann::json::parse(slurp(out / "B" / "diag.json"));
  REQUIRE(diag.contains("gamma"));
  REQUIRE(diag["gamma"].get<double>() > 0.0);
  REQUIRE(diag["termination"] == "horizon_reached");
}

TEST_CASE("synth reports a missing config file with its path") {
  const auto res = run_command(binary() + " synth --config /no/such/file.conf");
  REQUIRE(res.exit_code == 2);
  REQUIRE(res.output.find("/no/such/file.conf") != std::string::npos);
}

TEST_CASE("synth from a custom affine config") {
  const fs::path out = scratch("synthcfg");
  const fs::path conf = out / "run.conf";
  {
    std::ofstream f(conf);
    f << "system = affine\n"
         "d = 2\n"
         "m = 2\n"
         "G = 1 0 0 1\n"
         "L_f = 0.5\n"
         "L_G = 0.5\n"
         "dt = 1e-3\n"
         "eps = 0.05\n"
         "k = 2\n"
         "T = 0.2\n"
         "y = 0.1 0\n";
  }
  const auto res = run_command(binary() + " synth --config " + conf.string() + " --out " +
                               out.string());
  CAPTURE(res.output);
  REQUIRE(res.exit_code == 0);
  REQUIRE(res.output.find("termination target_radius") != std::string::npos);
  REQUIRE(fs::exists(out / "custom" / "scenario.csv"));
}

TEST_CASE("identical invocations produce byte-identical artifacts") {
  const fs::path out1 = scratch("det1");
  const fs::path out2 = scratch("det2");
  // scenario D finishes in a couple of cycles, which keeps this quick
  REQUIRE(run_command(binary() + " synth --scenario D --angle 30 --out " + out1.string())
              .exit_code == 0);
  REQUIRE(run_command(binary() + " synth --scenario D --angle 30 --out " + out2.string())
              .exit_code == 0);
  for (const char* name : {"scenario.csv", "grs.csv", "reference.csv", "control.csv",
                           "cycles.jsonl"})
    REQUIRE(slurp(out1 / "D" / name) == slurp(out2 / "D" / name));
  // the diagnostics differ only in the measured runtime
  auto strip_runtime = [](const fs::path& p) {
    nlohmann::json j = nlohmann::json::parse(slurp(p));
    j.erase("runtime_s");
    return j.dump();
  };
  REQUIRE(strip_runtime(out1 / "D" / "diag.json") == strip_runtime(out2 / "D" / "diag.json"));
}

TEST_CASE("GRSREACH_OUT selects the default output root") {
  const fs::path out = scratch("envroot");
  const auto res = run_command("GRSREACH_OUT=" + out.string() + " " + binary() +
                               " grs --scenario A --T 0.1 --samples 8");
  REQUIRE(res.exit_code == 0);
  REQUIRE(fs::exists(out / "grs.csv"));
}

TEST_CASE("verify runs the surrogate suite") {
  const auto res = run_command(binary() + " verify --suite proxy");
  CAPTURE(res.output);
  REQUIRE(res.exit_code == 0);
  REQUIRE(res.output.find("[PASS] proxy.collinearity") != std::string::npos);
  REQUIRE(res.output.find("[FAIL]") == std::string::npos);
}

TEST_CASE("corrupted tolerances make the verifier fail") {
  const auto res = run_command(binary() + " verify --suite proxy --corrupt-tolerances");
  REQUIRE(res.exit_code == 1);
  REQUIRE(res.output.find("[FAIL]") != std::string::npos);
}

TEST_CASE("the full verification battery passes") {
  const auto res = run_command(binary() + " verify --suite all");
  CAPTURE(res.output);
  REQUIRE(res.exit_code == 0);
  REQUIRE(res.output.find("[FAIL]") == std::string::npos);
  // every suite contributed
  for (const char* prefix : {"proxy.", "learner.", "synth.", "casestudy."})
    REQUIRE(res.output.find(prefix) != std::string::npos);
}

TEST_CASE("batch runs fan out across scenarios") {
  const fs::path out = scratch("batch");
  const auto res =
      run_command(binary() + " synth --scenario all --jobs 4 --out " + out.string());
  CAPTURE(res.output);
  REQUIRE(res.exit_code == 0);
  for (const char* id : {"A", "B", "C", "D"}) {
    REQUIRE(fs::exists(out / id / "scenario.csv"));
    REQUIRE(fs::exists(out / id / "diag.json"));
  }
  // reports arrive in scenario order regardless of completion order
  REQUIRE(res.output.find("scenario A") < res.output.find("scenario B"));
  REQUIRE(res.output.find("scenario B") < res.output.find("scenario C"));
  REQUIRE(res.output.find("scenario C") < res.output.find("scenario D"));
}

TEST_CASE("missing subcommand is a usage error") {
  const auto res = run_command(binary());
  REQUIRE(res.exit_code == 2);
}
