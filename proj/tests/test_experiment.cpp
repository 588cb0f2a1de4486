#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "nbiot/experiment.hpp"

using namespace nbiot;
using namespace nbiot::experiment;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::path(NBIOT_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

RunSpec small_eval(const fs::path& out) {
  RunSpec spec;
  spec.mode = Mode::kEval;
  spec.controller = ControllerKind::kStatic;
  spec.config.sim.n_devices = 200;
  spec.config.sim.n_tti_per_episode = 12;
  spec.episodes = 2;
  spec.seeds = {1, 2};
  spec.out_dir = out.string();
  return spec;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NBIOT_SIM_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("name parsing") {
  CHECK(parse_mode("train") == Mode::kTrain);
  CHECK(parse_mode("summarize") == Mode::kSummarize);
  CHECK(parse_controller("cma-dqn") == ControllerKind::kCmaDqn);
  CHECK(to_string(ControllerKind::kLeUrc) == "le-urc");
  CHECK_THROWS_AS(parse_mode("fly"), ConfigError);
  CHECK_THROWS_AS(parse_controller("oracle"), ConfigError);
}

TEST_CASE("invalid run combinations are rejected") {
  RunSpec spec = small_eval(fresh_dir("validate"));
  CHECK_NOTHROW(validate(spec));
  auto bad = spec;
  bad.mode = Mode::kTrain;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = spec;
  bad.controller = ControllerKind::kCmaDqn;
  CHECK_THROWS_AS(validate(bad), ConfigError);  // eval without weights
  bad = spec;
  bad.seeds = {3, 3};
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = spec;
  bad.episodes = 0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = spec;
  bad.le_repe = {1, 3, 8};
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = spec;
  bad.mode = Mode::kSummarize;
  CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("eval writes the expected artifacts deterministically") {
  const auto a = fresh_dir("eval-a"), b = fresh_dir("eval-b");
  run_experiment(small_eval(a));
  run_experiment(small_eval(b));
  for (const char* seed : {"seed_1", "seed_2"}) {
    const auto metrics = slurp(a / seed / "metrics.csv");
    CHECK(metrics == slurp(b / seed / "metrics.csv"));
    CHECK(metrics.rfind(metrics_header() + "\n", 0) == 0);
    CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 1 + 2 * 12 * 3);
    const auto summary = slurp(a / seed / "summary.csv");
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 1 + 2);
  }
  CHECK(slurp(a / "seed_1" / "metrics.csv") != slurp(a / "seed_2" / "metrics.csv"));
  CHECK(slurp(a / "per_tti_summary.csv") == slurp(b / "per_tti_summary.csv"));

  const auto manifest = slurp(a / "manifest.txt");
  CHECK(manifest.find("complete") != std::string::npos);
  const auto reloaded = parse_config_text(manifest);
  CHECK(reloaded.sim.n_devices == 200);
  CHECK(reloaded.sim.n_tti_per_episode == 12);
}

TEST_CASE("per-TTI summary of one episode reproduces the raw rows") {
  const auto dir = fresh_dir("summary-one");
  auto spec = small_eval(dir);
  spec.controller = ControllerKind::kLeUrc;
  spec.episodes = 1;
  spec.seeds = {4};
  run_experiment(spec);
  const auto rows = summarize({(dir / "seed_4" / "metrics.csv").string()});
  REQUIRE(rows.size() == 12);

  std::ifstream f(dir / "seed_4" / "metrics.csv");
  std::string line;
  std::getline(f, line);
  const auto header = split(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  double arrivals = 0.0;
  while (std::getline(f, line)) {
    const auto c = split(line);
    const int tti = std::stoi(c[col["tti"]]);
    const auto g = static_cast<std::size_t>(std::stoi(c[col["group"]]));
    const auto& r = rows[static_cast<std::size_t>(tti - 1)];
    CHECK(r.tti == tti);
    CHECK(r.runs == 1);
    CHECK(r.v_succ_group[g] == std::stod(c[col["v_succ"]]));
    CHECK(r.n_repe[g] == std::stod(c[col["n_repe"]]));
    CHECK(r.rao[g] == std::stod(c[col["n_rach"]]) * std::stod(c[col["f_prea"]]));
    CHECK(std::stod(c[col["rao"]]) == r.rao[g]);
    arrivals += std::stod(c[col["arrivals"]]);
  }
  double summed = 0.0;
  for (const auto& r : rows) {
    CHECK(r.v_succ == doctest::Approx(r.v_succ_group[0] + r.v_succ_group[1] + r.v_succ_group[2]));
    summed += r.arrivals;
  }
  CHECK(summed == arrivals);
  CHECK(arrivals <= 200.0);
}

TEST_CASE("summary averages across files and rejects foreign schemas") {
  std::istringstream a(metrics_header() + "\n1,0,1,0,0,1,11,1,0,1,12,1,12,1,1,1,0,0\n");
  std::istringstream b(metrics_header() + "\n2,0,1,0,0,0,12,3,0,1,12,4,12,3,3,2,0,0\n");
  const auto rows = summarize_streams({&a, &b});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].runs == 2);
  CHECK(rows[0].v_succ == 2.0);
  CHECK(rows[0].n_repe[0] == 2.5);
  CHECK(rows[0].arrivals == 1.5);

  std::istringstream bad("tti,served\n1,2\n");
  CHECK_THROWS_AS(summarize_streams({&bad}), ConfigError);
}

TEST_CASE("command-line exit codes") {
  const auto dir = fresh_dir("cli");
  const auto cfg = dir / "small.cfg";
  std::ofstream(cfg) << "n_devices = 100\nn_tti_per_episode = 5\n";
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("--mode eval --controller static --config " + cfg.string() + " --out " + (dir / "ok").string()) == 0);
  CHECK(fs::exists(dir / "ok" / "seed_1" / "metrics.csv"));
  CHECK(run_cli("--mode nonsense") == 1);
  CHECK(run_cli("--mode train --controller le-urc --out " + (dir / "x").string()) == 1);
  CHECK(run_cli("--mode eval --config " + (dir / "missing.cfg").string()) == 1);
  std::ofstream(dir / "bad.cfg") << "n_devices = lots\n";
  CHECK(run_cli("--mode eval --config " + (dir / "bad.cfg").string()) == 1);
  CHECK(run_cli("--mode summarize --inputs " + cfg.string() + " --out " + (dir / "s").string()) == 1);
  // an output directory below a regular file is a runtime failure, not a usage error
  CHECK(run_cli("--mode eval --controller static --config " + cfg.string() + " --out " + (cfg / "sub").string()) == 2);
}

}
