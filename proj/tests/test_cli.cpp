// End-to-end checks of the command-line surface: exit codes, report schema,
// determinism, and artifact formats.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kBin = EPILAB_BIN;
const fs::path kTmp = EPILAB_TEST_TMP;

int run(const std::string& args) {
  const std::string cmd = kBin + " " + args + " > " + (kTmp / "stdout.txt").string() +
                          " 2> " + (kTmp / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

struct TmpDir {
  TmpDir() {
    fs::remove_all(kTmp);
    fs::create_directories(kTmp);
  }
};
const TmpDir tmpdir_once;

}  // namespace

TEST_CASE("cone command writes the published angle") {
  const fs::path out = kTmp / "cone7.json";
  REQUIRE(run("cone --dim 7 --out " + out.string()) == 0);
  auto j = load(out);
  CHECK(j["meta"]["schema"] == 1);
  CHECK(j["meta"]["config"]["dim"] == "7");
  CHECK(j["meta"]["wall_clock_ms"].get<double>() > 0.0);
  CHECK(std::abs(j["cone"]["sin_theta0"].get<double>() - 0.517331) < 5e-6);
}

TEST_CASE("cone --check reports invariant passes") {
  const fs::path out = kTmp / "cone7_check.json";
  REQUIRE(run("cone --dim 7 --check --out " + out.string()) == 0);
  auto j = load(out);
  for (const auto& [k, v] : j["checks"].items()) {
    CAPTURE(k);
    CHECK(v.get<bool>());
  }
}

TEST_CASE("dimension guard exits with usage code") {
  CHECK(run("cone --dim 2") == 64);
}

TEST_CASE("unknown flags exit with usage code") {
  CHECK(run("cone --dim 7 --frobnicate") == 64);
}

TEST_CASE("unknown config keys are rejected") {
  const fs::path cfg = kTmp / "bad.cfg";
  std::ofstream(cfg) << "frobnicate=1\n";
  CHECK(run("cone --dim 7 --config " + cfg.string()) == 64);
}

TEST_CASE("config file supplies flags, command line overrides") {
  const fs::path cfg = kTmp / "decay.cfg";
  std::ofstream(cfg) << "[decay]\ngamma=0.0\neps=0.05\ndim=7\n";
  const fs::path out = kTmp / "decay_cfg.json";
  REQUIRE(run("decay --config " + cfg.string() + " --out " + out.string()) == 0);
  auto j = load(out);
  CHECK(j["summary"]["closed_form_exponent"].get<double>() ==
        doctest::Approx(7 * 0.05 / 0.95));
  // command line wins over the file
  const fs::path out2 = kTmp / "decay_cfg2.json";
  REQUIRE(run("decay --config " + cfg.string() + " --eps 0.1 --out " + out2.string()) ==
          0);
  CHECK(load(out2)["summary"]["closed_form_exponent"].get<double>() ==
        doctest::Approx(7 * 0.1 / 0.9));
}

TEST_CASE("decay summary matches the closed form") {
  const fs::path out = kTmp / "decay.json";
  const fs::path csv = kTmp / "decay.csv";
  REQUIRE(run("decay --gamma 0 --eps 0.05 --dim 7 --out " + out.string() + " --csv " +
              csv.string()) == 0);
  auto j = load(out);
  CHECK(std::abs(j["summary"]["fitted_exponent"].get<double>() -
                 j["summary"]["closed_form_exponent"].get<double>()) < 1e-6);
  const std::string head = slurp(csv).substr(0, 32);
  CHECK(head.rfind("radius,bound,ode_value,l2_drift", 0) == 0);
}

TEST_CASE("spectrum CSV carries d negative entries with multiplicity") {
  const fs::path csv = kTmp / "spec.csv";
  REQUIRE(run("spectrum --dim 7 --ell-max 4 --jobs 2 --csv " + csv.string()) == 0);
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "ell,parity,multiplicity,eigenvalue,classification,closed_form,residual");
  int negative_mult = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string ell, parity, mult, val, cls;
    std::getline(ss, ell, ',');
    std::getline(ss, parity, ',');
    std::getline(ss, mult, ',');
    std::getline(ss, val, ',');
    std::getline(ss, cls, ',');
    if (cls == "negative") negative_mult += std::stoi(mult);
  }
  CHECK(negative_mult == 7);
}

TEST_CASE("integrability certificate exits clean at d=7") {
  const fs::path out = kTmp / "cert.json";
  REQUIRE(run("integrability --dim 7 --certify-d7 --out " + out.string()) == 0);
  auto j = load(out);
  CHECK(j["pass"].get<bool>());
  CHECK(j["d7_certificate"]["pass"].get<bool>());
  CHECK(j["verdicts"][0]["integrable"].get<bool>());
}

TEST_CASE("epi scenario run is deterministic modulo the wall clock") {
  const fs::path scen = kTmp / "scen.json";
  std::ofstream(scen) << R"({"dim":7,"random":{"count":2,"seed":11,
    "shift_scale":0.015,"kappa_scale":0.01,"high_scale":0.01,"modes":[2]}})";
  const fs::path o1 = kTmp / "epi1.json", o2 = kTmp / "epi2.json";
  REQUIRE(run("epi --scenario " + scen.string() + " --jobs 2 --out " + o1.string()) == 0);
  REQUIRE(run("epi --scenario " + scen.string() + " --jobs 2 --out " + o2.string()) == 0);
  auto j1 = load(o1), j2 = load(o2);
  j1["meta"].erase("wall_clock_ms");
  j2["meta"].erase("wall_clock_ms");
  CHECK(j1.dump() == j2.dump());
  CHECK(j1["pass"].get<bool>());
}

TEST_CASE("flow command fits the quartic exponent") {
  const fs::path out = kTmp / "flow.json";
  const fs::path csv = kTmp / "flow.csv";
  REQUIRE(run("flow --energy x4 --x0 1.0 --t-end 0.9 --out " + out.string() +
              " --csv " + csv.string()) == 0);
  auto j = load(out);
  CHECK(std::abs(j["flow"]["gamma_fit"].get<double>() - 0.25) < 0.03);
  CHECK(slurp(csv).rfind("t,g_value,grad_norm", 0) == 0);
}

TEST_CASE("ls_toy flow reduces to the quartic") {
  const fs::path out = kTmp / "flow_toy.json";
  REQUIRE(run("flow --energy ls_toy --x0 0.8 --t-end 0.7 --out " + out.string()) == 0);
  auto j = load(out);
  CHECK(std::abs(j["flow"]["gamma_fit"].get<double>() - 0.25) < 0.03);
}

TEST_CASE("output directory env var is honored") {
  const fs::path dir = kTmp / "outdir";
  fs::create_directories(dir);
  const std::string cmd = "EPILAB_OUT_DIR=" + dir.string() + " " + kBin +
                          " decay --gamma 0 --eps 0.05 --dim 7 --out rel.json > /dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(fs::exists(dir / "rel.json"));
}

