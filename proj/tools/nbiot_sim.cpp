// Command-line driver: train / eval / sweep / summarize.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nbiot/config.hpp"
#include "nbiot/experiment.hpp"

namespace {

using namespace nbiot;
using namespace nbiot::experiment;

// "n_rach,f_prea,n_repe" applied to every group, or three such triples
// separated by ';'.
ActionVector parse_static_action(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(';', start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (parts.size() != 1 && parts.size() != kNumGroups) {
    throw ConfigError("--static-action expects one or three n_rach,f_prea,n_repe triples");
  }
  ActionVector a;
  for (int g = 0; g < kNumGroups; ++g) {
    const auto& p = parts[parts.size() == 1 ? 0 : static_cast<std::size_t>(g)];
    GroupAction ga;
    char c1 = 0, c2 = 0;
    std::size_t used = 0;
    try {
      ga.n_rach = std::stoi(p, &used);
      std::size_t off = used;
      c1 = p.at(off++);
      ga.f_prea = std::stoi(p.substr(off), &used);
      off += used;
      c2 = p.at(off++);
      ga.n_repe = std::stoi(p.substr(off), &used);
      if (off + used != p.size()) throw ConfigError("");
    } catch (const std::exception&) {
      throw ConfigError("malformed --static-action '" + text + "'");
    }
    if (c1 != ',' || c2 != ',') throw ConfigError("malformed --static-action '" + text + "'");
    a[g] = ga;
  }
  return a;
}

std::string default_out_root() {
  if (const char* env = std::getenv("NBIOT_OUT_ROOT"); env && *env) return env;
  return "runs";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NB-IoT uplink resource configuration simulator"};

  std::string mode = "eval";
  std::string controller = "le-urc";
  std::string config_path;
  std::string out_dir;
  std::string target_mode;
  std::string static_action;
  int episodes = 1;
  std::vector<std::uint64_t> seeds{1};
  std::vector<int> le_repe{1, 4, 8};
  RunSpec spec;

  app.add_option("--mode", mode, "train | eval | sweep | summarize")->capture_default_str();
  app.add_option("--controller", controller, "cma-dqn | le-urc | static | random")->capture_default_str();
  app.add_option("--config", config_path, "key=value config file (defaults when omitted)");
  app.add_option("--episodes", episodes, "episodes per seed")->capture_default_str();
  app.add_option("--seeds", seeds, "seeds, run in parallel")->delimiter(',')->capture_default_str();
  app.add_option("--out", out_dir, "output directory (default $NBIOT_OUT_ROOT/<mode>-<controller>)");
  app.add_option("--target-mode", target_mode, "ddqn | dqn-max (overrides the config)");
  app.add_option("--le-repe", le_repe, "le-urc repetitions per CE group")->expected(kNumGroups)->delimiter(',');
  app.add_option("--static-action", static_action, "static controller action, e.g. 1,12,1 or 1,12,1;1,12,4;1,12,8");
  app.add_option("--checkpoint", spec.checkpoint, "weights to load; {seed} is replaced per seed");
  app.add_option("--inputs", spec.inputs, "summarize: metrics.csv files to merge");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    spec.mode = parse_mode(mode);
    spec.controller = parse_controller(controller);
    spec.config_path = config_path;
    if (!config_path.empty()) spec.config = load_config_file(config_path);
    if (!target_mode.empty()) spec.config.dqn.target_mode = parse_target_mode(target_mode);
    spec.episodes = episodes;
    spec.seeds = seeds;
    if (le_repe.size() != kNumGroups) throw ConfigError("--le-repe expects three values");
    for (int g = 0; g < kNumGroups; ++g) spec.le_repe[static_cast<std::size_t>(g)] = le_repe[static_cast<std::size_t>(g)];
    if (!static_action.empty()) spec.static_action = parse_static_action(static_action);
    spec.out_dir = !out_dir.empty() ? out_dir
                                    : default_out_root() + "/" + std::string(to_string(spec.mode)) + "-" +
                                          std::string(to_string(spec.controller));
    run_experiment(spec);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  std::cout << spec.out_dir << '\n';
  return 0;
}
