#include "nbiot/experiment.hpp"

#include <algorithm>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <tuple>
#include <sstream>

#include "nbiot/dqn.hpp"

namespace nbiot::experiment {

namespace fs = std::filesystem;

Mode parse_mode(std::string_view s) {
  if (s == "train") return Mode::kTrain;
  if (s == "eval") return Mode::kEval;
  if (s == "sweep") return Mode::kSweep;
  if (s == "summarize") return Mode::kSummarize;
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

ControllerKind parse_controller(std::string_view s) {
  if (s == "cma-dqn") return ControllerKind::kCmaDqn;
  if (s == "le-urc") return ControllerKind::kLeUrc;
  if (s == "static") return ControllerKind::kStatic;
  if (s == "random") return ControllerKind::kRandom;
  throw ConfigError("unknown controller '" + std::string(s) + "'");
}

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::kTrain: return "train";
    case Mode::kEval: return "eval";
    case Mode::kSweep: return "sweep";
    case Mode::kSummarize: return "summarize";
  }
  return "?";
}

std::string_view to_string(ControllerKind c) {
  switch (c) {
    case ControllerKind::kCmaDqn: return "cma-dqn";
    case ControllerKind::kLeUrc: return "le-urc";
    case ControllerKind::kStatic: return "static";
    case ControllerKind::kRandom: return "random";
  }
  return "?";
}

void validate(const RunSpec& spec) {
  if (spec.mode == Mode::kSummarize) {
    if (spec.inputs.empty()) throw ConfigError("summarize needs at least one metrics file");
    if (spec.out_dir.empty()) throw ConfigError("no output directory given");
    return;
  }
  require_valid(spec.config.sim);
  if (auto errs = validate_config(spec.config.dqn); !errs.empty()) {
    throw ConfigError("invalid DQN config: " + errs.front().field + ": " + errs.front().message);
  }
  if (spec.episodes < 1) throw ConfigError("--episodes must be at least 1");
  if (spec.seeds.empty()) throw ConfigError("--seeds must list at least one seed");
  if (std::set<std::uint64_t>(spec.seeds.begin(), spec.seeds.end()).size() != spec.seeds.size()) {
    throw ConfigError("--seeds contains duplicates");
  }
  if (spec.out_dir.empty()) throw ConfigError("no output directory given");
  if (spec.mode == Mode::kTrain && spec.controller != ControllerKind::kCmaDqn) {
    throw ConfigError("train mode is only valid for the cma-dqn controller");
  }
  if (spec.mode == Mode::kEval && spec.controller == ControllerKind::kCmaDqn && spec.checkpoint.empty()) {
    throw ConfigError("evaluating cma-dqn needs --checkpoint");
  }
  for (int r : spec.le_repe) {
    if (std::find(spec.config.sim.repe_set.begin(), spec.config.sim.repe_set.end(), r) ==
        spec.config.sim.repe_set.end()) {
      throw ConfigError("--le-repe value " + std::to_string(r) + " is not in repe_set");
    }
  }
  if (!is_valid_action(spec.static_action, spec.config.sim)) {
    throw ConfigError("static action is outside the configured action sets");
  }
}

EpisodeStats run_episode(Environment& env, Controller& controller, std::uint64_t episode) {
  env.reset(episode);
  controller.reset();
  while (!env.terminal()) {
    const auto a = controller.decide();
    const auto res = env.step(a);
    controller.observe(res.obs, a, res.reward);
  }
  return env.stats();
}

std::string metrics_header() {
  return "seed,episode,tti,group,v_cp,v_sp,v_ip,v_succ,v_unsc,n_rach,f_prea,n_repe,rao,reward,cum_served,"
         "arrivals,drops_rach,drops_rrc";
}

void append_metrics(std::ostream& os, std::uint64_t seed, long episode, const EpisodeStats& stats) {
  long cum = 0;
  for (const auto& r : stats.ttis) {
    cum += static_cast<long>(r.reward);
    for (int g = 0; g < kNumGroups; ++g) {
      const auto gi = static_cast<std::size_t>(g);
      const auto& o = r.obs[g];
      const auto& a = r.action[g];
      os << seed << ',' << episode << ',' << r.tti << ',' << g << ',' << o.v_cp << ',' << o.v_sp << ',' << o.v_ip
         << ',' << o.v_succ << ',' << o.v_unsc << ',' << a.n_rach << ',' << a.f_prea << ',' << a.n_repe << ','
         << a.n_rach * a.f_prea << ',' << r.reward << ',' << cum << ',' << r.arrivals[gi] << ','
         << r.drops_rach[gi] << ',' << r.drops_rrc[gi] << '\n';
    }
  }
}

std::string summary_header() { return "seed,episode,served,mean_v_succ,arrivals,drops_rach,drops_rrc,epsilon"; }

void append_summary(std::ostream& os, std::uint64_t seed, long episode, const EpisodeStats& stats, double epsilon) {
  long arrivals = 0, drops_rach = 0, drops_rrc = 0;
  for (const auto& r : stats.ttis) {
    for (int g = 0; g < kNumGroups; ++g) {
      const auto gi = static_cast<std::size_t>(g);
      arrivals += r.arrivals[gi];
      drops_rach += r.drops_rach[gi];
      drops_rrc += r.drops_rrc[gi];
    }
  }
  const double served = stats.total_reward();
  const double mean = stats.ttis.empty() ? 0.0 : served / static_cast<double>(stats.ttis.size());
  os << seed << ',' << episode << ',' << served << ',' << mean << ',' << arrivals << ',' << drops_rach << ','
     << drops_rrc << ',' << epsilon << '\n';
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::string manifest_text(const RunSpec& spec, std::string_view controller, std::string_view status) {
  std::ostringstream os;
  os << "# nbiot_sim run manifest; the key=value lines load with --config\n";
  os << "# run.mode = " << to_string(spec.mode) << '\n';
  os << "# run.controller = " << controller << '\n';
  os << "# run.config_path = " << spec.config_path << '\n';
  os << "# run.episodes = " << spec.episodes << '\n';
  os << "# run.seeds = ";
  for (std::size_t i = 0; i < spec.seeds.size(); ++i) os << (i ? "," : "") << spec.seeds[i];
  os << '\n';
  os << "# run.le_repe = " << spec.le_repe[0] << ',' << spec.le_repe[1] << ',' << spec.le_repe[2] << '\n';
  os << "# run.static = ";
  for (int g = 0; g < kNumGroups; ++g) {
    const auto& a = spec.static_action[g];
    os << (g ? ";" : "") << a.n_rach << ',' << a.f_prea << ',' << a.n_repe;
  }
  os << '\n';
  os << "# run.checkpoint = " << spec.checkpoint << '\n';
  os << "# run.status = " << status << '\n';
  os << format_config(spec.config);
  return os.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  f << text;
}

std::string checkpoint_for_seed(const std::string& pattern, std::uint64_t seed) {
  std::string out = pattern;
  const std::string key = "{seed}";
  if (auto pos = out.find(key); pos != std::string::npos) out.replace(pos, key.size(), std::to_string(seed));
  return out;
}

std::unique_ptr<Controller> make_baseline(const RunSpec& spec, ControllerKind kind, const SimConfig& sim) {
  switch (kind) {
    case ControllerKind::kLeUrc: return std::make_unique<LeUrcController>(sim, spec.le_repe);
    case ControllerKind::kStatic: return std::make_unique<StaticController>(spec.static_action);
    case ControllerKind::kRandom:
      return std::make_unique<RandomController>(sim, RngStream(sim.seed, Stream::kExploration, 1u << 20));
    case ControllerKind::kCmaDqn: break;
  }
  throw ContractViolation("make_baseline: not a baseline controller");
}

// One seed of one controller; writes seed_<s>/{metrics,summary}.csv.
void run_seed(const RunSpec& spec, ControllerKind kind, std::uint64_t seed, const fs::path& dir) {
  SimConfig sim = spec.config.sim;
  sim.seed = seed;
  fs::create_directories(dir);
  std::ofstream metrics(dir / "metrics.csv", std::ios::binary);
  std::ofstream summary(dir / "summary.csv", std::ios::binary);
  if (!metrics || !summary) throw ConfigError("cannot write outputs under " + dir.string());
  metrics << metrics_header() << '\n';
  summary << summary_header() << '\n';

  if (kind == ControllerKind::kCmaDqn) {
    dqn::AgentEnsemble ensemble(sim, spec.config.dqn, seed);
    if (spec.mode == Mode::kTrain) {
      if (!spec.checkpoint.empty()) {
        const auto init = checkpoint_for_seed(spec.checkpoint, seed);
        if (fs::exists(init)) ensemble.load_file(init);
      }
      dqn::TrainingOptions opts;
      opts.episodes = spec.episodes;
      opts.first_episode = ensemble.episodes_done;
      dqn::run_training(ensemble, opts, [&](long ep, const EpisodeStats& stats, const dqn::AgentEnsemble& ens) {
        append_metrics(metrics, seed, ep, stats);
        append_summary(summary, seed, ep, stats, ens.epsilon);
      });
      ensemble.save_file((dir / "checkpoint.bin").string());
      return;
    }
    ensemble.load_file(checkpoint_for_seed(spec.checkpoint, seed));
    dqn::CmaDqnController controller(ensemble, 0.0, RngStream(seed, Stream::kExploration, 1u << 21));
    Environment env(sim);
    for (long ep = 0; ep < spec.episodes; ++ep) {
      const auto stats = run_episode(env, controller, static_cast<std::uint64_t>(ep));
      append_metrics(metrics, seed, ep, stats);
      append_summary(summary, seed, ep, stats, 0.0);
    }
    return;
  }

  auto controller = make_baseline(spec, kind, sim);
  Environment env(sim);
  for (long ep = 0; ep < spec.episodes; ++ep) {
    const auto stats = run_episode(env, *controller, static_cast<std::uint64_t>(ep));
    append_metrics(metrics, seed, ep, stats);
    append_summary(summary, seed, ep, stats, 0.0);
  }
}

void run_campaign(const RunSpec& spec, ControllerKind kind, const fs::path& out) {
  fs::create_directories(out);
  write_file(out / "manifest.txt", manifest_text(spec, to_string(kind), "running"));

  const auto n = static_cast<int>(spec.seeds.size());
  std::vector<std::exception_ptr> errors(spec.seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    const auto seed = spec.seeds[static_cast<std::size_t>(i)];
    try {
      run_seed(spec, kind, seed, out / ("seed_" + std::to_string(seed)));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) {
      write_file(out / "manifest.txt", manifest_text(spec, to_string(kind), "partial"));
      std::rethrow_exception(e);
    }
  }

  std::vector<std::string> files;
  for (auto seed : spec.seeds) files.push_back((out / ("seed_" + std::to_string(seed)) / "metrics.csv").string());
  write_file(out / "per_tti_summary.csv", format_summary(summarize(files)));
  write_file(out / "manifest.txt", manifest_text(spec, to_string(kind), "complete"));
}

}  // namespace

void run_experiment(const RunSpec& spec) {
  validate(spec);
  const fs::path out(spec.out_dir);
  switch (spec.mode) {
    case Mode::kSummarize:
      fs::create_directories(out);
      write_file(out / "per_tti_summary.csv", format_summary(summarize(spec.inputs)));
      return;
    case Mode::kTrain:
    case Mode::kEval:
      run_campaign(spec, spec.controller, out);
      return;
    case Mode::kSweep: {
      for (auto kind : {ControllerKind::kLeUrc, ControllerKind::kStatic, ControllerKind::kRandom}) {
        run_campaign(spec, kind, out / std::string(to_string(kind)));
      }
      if (!spec.checkpoint.empty()) {
        RunSpec eval = spec;
        eval.mode = Mode::kEval;
        run_campaign(eval, ControllerKind::kCmaDqn, out / "cma-dqn");
      }
      return;
    }
  }
}

std::vector<TtiAggregate> summarize_streams(std::vector<std::istream*> streams) {
  const auto expected = split_csv(metrics_header());
  std::map<int, TtiAggregate> by_tti;
  std::map<int, std::set<std::tuple<std::size_t, std::string, std::string>>> runs;

  for (std::size_t f = 0; f < streams.size(); ++f) {
    auto& in = *streams[f];
    std::string line;
    if (!std::getline(in, line) || split_csv(line) != expected) {
      throw ConfigError("metrics schema mismatch in input " + std::to_string(f));
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto c = split_csv(line);
      if (c.size() != expected.size()) throw ConfigError("metrics row has wrong column count");
      try {
        const int tti = std::stoi(c[2]);
        const auto g = static_cast<std::size_t>(std::stoi(c[3]));
        if (g >= kNumGroups) throw ConfigError("metrics row has an invalid group");
        auto& agg = by_tti[tti];
        agg.tti = tti;
        runs[tti].emplace(f, c[0], c[1]);
        const double v_succ = std::stod(c[7]);
        agg.v_succ += v_succ;
        agg.v_succ_group[g] += v_succ;
        agg.n_repe[g] += std::stod(c[11]);
        agg.rao[g] += std::stod(c[12]);
        agg.arrivals += std::stod(c[15]);
      } catch (const std::logic_error&) {
        throw ConfigError("metrics row is not numeric: " + line);
      }
    }
  }

  std::vector<TtiAggregate> out;
  for (auto& [tti, agg] : by_tti) {
    agg.runs = static_cast<int>(runs[tti].size());
    const double k = agg.runs;
    agg.v_succ /= k;
    agg.arrivals /= k;
    for (int g = 0; g < kNumGroups; ++g) {
      const auto gi = static_cast<std::size_t>(g);
      agg.v_succ_group[gi] /= k;
      agg.n_repe[gi] /= k;
      agg.rao[gi] /= k;
    }
    out.push_back(agg);
  }
  return out;
}

std::vector<TtiAggregate> summarize(const std::vector<std::string>& metrics_files) {
  std::vector<std::unique_ptr<std::ifstream>> files;
  std::vector<std::istream*> streams;
  for (const auto& p : metrics_files) {
    files.push_back(std::make_unique<std::ifstream>(p));
    if (!*files.back()) throw ConfigError("cannot open metrics file " + p);
    streams.push_back(files.back().get());
  }
  return summarize_streams(streams);
}

std::string format_summary(const std::vector<TtiAggregate>& rows) {
  std::ostringstream os;
  os << "tti,runs,v_succ,arrivals";
  for (const char* col : {"v_succ", "n_repe", "rao"}) {
    for (int g = 0; g < kNumGroups; ++g) os << ',' << col << "_g" << g;
  }
  os << '\n';
  for (const auto& r : rows) {
    os << r.tti << ',' << r.runs << ',' << r.v_succ << ',' << r.arrivals;
    for (const auto* arr : {&r.v_succ_group, &r.n_repe, &r.rao}) {
      for (double v : *arr) os << ',' << v;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace nbiot::experiment
