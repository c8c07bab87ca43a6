// End-to-end runs of the v1spin executable.

#include <doctest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "v1spin/trace_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("v1spin_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Runs the CLI with `args` (already shell-quoted where needed).
Result cli(const std::string& args, const std::string& stdin_text = {}) {
  const fs::path out = scratch() / "stdout", err = scratch() / "stderr", in = scratch() / "stdin";
  spit(in, stdin_text);
  const std::string cmd = std::string("'") + V1SPIN_CLI + "' " + args + " <'" + in.string() + "' >'" +
                          out.string() + "' 2>'" + err.string() + "'";
  const int st = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string path(const std::string& name) { return "'" + (scratch() / name).string() + "'"; }

// Everything after the header row.
std::string data_rows(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, rows;
  bool header = false;
  while (std::getline(in, line)) {
    if (!header) {
      header = !line.empty() && line[0] != '#';
      continue;
    }
    rows += line + "\n";
  }
  return rows;
}

double param(const json& j, const std::string& name) { return j.at("parameters").at(name).at("value").get<double>(); }

const std::string kSource = V1SPIN_SOURCE_DIR;

}  // namespace

TEST_CASE("simulate ple, then fit two Lorentzians") {
  REQUIRE(cli("simulate ple --out " + path("ple.csv")).code == 0);
  CHECK(fs::exists(scratch() / "ple.csv.sidecar.json"));
  const Result f = cli("fit lorentzian " + path("ple.csv") + " --peaks 2");
  REQUIRE(f.code == 0);
  const json j = json::parse(f.out);
  CHECK(std::abs(j.at("derived").at("separation").get<double>() - 980.5) <= 1.0);
}

TEST_CASE("Rabi MW2 over MW1 through the CLI") {
  double f[3] = {};
  for (int ch : {1, 2}) {
    const std::string name = "rabi" + std::to_string(ch) + ".csv";
    REQUIRE(cli("simulate rabi --channel MW" + std::to_string(ch) + " --out " + path(name)).code == 0);
    const Result r = cli("fit rabi " + path(name));
    REQUIRE(r.code == 0);
    f[ch] = param(json::parse(r.out), "frequency");
  }
  CHECK(std::abs(f[2] / f[1] - 2 / std::sqrt(3.0)) <= 1e-4);
}

TEST_CASE("golden ESEEM trace fits back to its couplings") {
  const std::string golden = "'" + kSource + "/tests/data/eseem_golden.csv'";
  const Result r = cli("fit eseem " + golden + " --omega-i 77.9");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(std::abs(param(j, "a_par") - 6) <= 1e-6);
  CHECK(std::abs(param(j, "a_perp") - 35) <= 1e-6);
  CHECK_FALSE(j.at("geometry").empty());
}

TEST_CASE("fit reads standard input") {
  const std::string text = slurp(kSource + "/tests/data/eseem_golden.csv");
  const Result r = cli("fit eseem - --omega-i 77.9", text);
  REQUIRE(r.code == 0);
  CHECK(std::abs(param(json::parse(r.out), "a_perp") - 35) <= 1e-6);
}

TEST_CASE("malformed CSV exits 4 and names the row") {
  spit(scratch() / "bad.csv", "tau_us,echo\n0,1\n1,abc\n");
  const Result r = cli("fit decay " + path("bad.csv"));
  CHECK(r.code == 4);
  CHECK(r.err.find("line 3") != std::string::npos);
  CHECK(r.err.find("abc") != std::string::npos);
  CHECK(r.out.empty());
}

TEST_CASE("populations from visibilities") {
  const Result r = cli("fit populations --v 0.5 0.9 0.7");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  double sum = 0;
  for (const auto& [k, v] : j.at("populations").items()) sum += v.get<double>();
  CHECK(sum == doctest::Approx(1).epsilon(1e-12));
  CHECK(cli("fit populations").code == 2);
}

TEST_CASE("bundled Hahn echo file matches simulate echo") {
  const std::string opts;
  const Result seq = cli("run '" + kSource + "/sequences/hahn_echo.seq'" + opts);
  const Result sim = cli("simulate echo" + opts);
  REQUIRE(seq.code == 0);
  REQUIRE(sim.code == 0);
  const std::string rows = data_rows(seq.out);
  CHECK_FALSE(rows.empty());
  CHECK(rows == data_rows(sim.out));
}

TEST_CASE("bundled initialization file matches the pumping trajectory") {
  const Result seq = cli("run '" + kSource + "/sequences/init_fidelity.seq' --observable p-1/2");
  const Result pump = cli("simulate pumping");
  REQUIRE(seq.code == 0);
  REQUIRE(pump.code == 0);
  const auto a = v1spin::io::parse_csv(seq.out), b = v1spin::io::parse_csv(pump.out);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.y[i] - b.y[i]) <= 1e-9);
}

TEST_CASE("empty sequence exits 4 with a location") {
  spit(scratch() / "empty.seq", "");
  const Result r = cli("run " + path("empty.seq"));
  CHECK(r.code == 4);
  CHECK(r.err.find("line 1, column 1") != std::string::npos);
}

TEST_CASE("sidecar rerun reproduces the output byte for byte") {
  REQUIRE(cli("simulate fid --seed 7 --noise-counts 1000 --set fid_points=31 --out " + path("fid.csv")).code == 0);
  const Result r = cli("rerun " + path("fid.csv.sidecar.json") + " --out " + path("fid2.csv"));
  REQUIRE(r.code == 0);
  CHECK(slurp(scratch() / "fid.csv") == slurp(scratch() / "fid2.csv"));

  REQUIRE(cli("run '" + kSource + "/sequences/hahn_echo.seq' --out " + path("echo.csv")).code == 0);
  REQUIRE(cli("rerun " + path("echo.csv.sidecar.json") + " --out " + path("echo2.csv")).code == 0);
  CHECK(slurp(scratch() / "echo.csv") == slurp(scratch() / "echo2.csv"));
}

TEST_CASE("config file and JSON output") {
  spit(scratch() / "run.cfg", "preset = s7\nple_points = 11 # coarse\n");
  const Result r = cli("simulate ple --config " + path("run.cfg") + " --format json");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j.at("x").size() == 11);
  CHECK(j.at("meta").at("preset") == "s7");
}

TEST_CASE("keys lists every key") {
  const Result r = cli("keys --preset s7");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("d_gs = 4.5") != std::string::npos);
  CHECK(cli("keys --describe").code == 0);
}

TEST_CASE("exit codes") {
  CHECK(cli("simulate nonsense").code == 2);
  CHECK(cli("simulate ple --set bogus=1").code == 2);
  CHECK(cli("simulate ple --set b0=5us").code == 2);
  CHECK(cli("simulate fid --noise-counts -1").code == 2);
  const Result solver =
      cli("simulate ple --model ten_level --set gamma_relax=0 --set mw_rate=0 --set lambda=0 --set ple_points=3");
  CHECK(solver.code == 3);
  CHECK(solver.err.find("not unique") != std::string::npos);
  spit(scratch() / "flat.csv", "t,y\n0,1\n1,1\n2,1\n3,1\n4,1\n5,1\n6,1\n7,1\n");
  CHECK(cli("fit rabi " + path("flat.csv")).code == 5);
  CHECK(cli("fit rabi " + path("missing.csv")).code != 0);
  CHECK(cli("").code == 2);
}
