#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nbiot/config.hpp"
#include "nbiot/controllers.hpp"
#include "nbiot/env.hpp"

namespace nbiot::experiment {

enum class Mode { kTrain, kEval, kSweep, kSummarize };
enum class ControllerKind { kCmaDqn, kLeUrc, kStatic, kRandom };

Mode parse_mode(std::string_view s);
ControllerKind parse_controller(std::string_view s);
std::string_view to_string(Mode m);
std::string_view to_string(ControllerKind c);

struct RunSpec {
  Mode mode = Mode::kEval;
  ControllerKind controller = ControllerKind::kLeUrc;
  std::string config_path;  // empty: built-in defaults
  ExperimentConfig config;
  int episodes = 1;
  std::vector<std::uint64_t> seeds{1};
  std::string out_dir;
  std::array<int, kNumGroups> le_repe{1, 4, 8};
  ActionVector static_action = ActionVector::uniform({1, 12, 1});
  // cma-dqn eval: weights to load ("{seed}" is replaced per seed).
  // train: optional initial weights.
  std::string checkpoint;
  // summarize: metrics files to merge.
  std::vector<std::string> inputs;
};

// Throws ConfigError for invalid combinations (e.g. train with a baseline).
void validate(const RunSpec& spec);

// Runs a campaign and writes its artifacts under spec.out_dir:
//   manifest.txt              resolved config + run flags + status
//   seed_<s>/metrics.csv      one row per (episode, tti, group)
//   seed_<s>/summary.csv      one row per episode
//   seed_<s>/checkpoint.bin   (train)
//   per_tti_summary.csv       merged over seeds and episodes
// sweep writes one such tree per controller in a subdirectory.
void run_experiment(const RunSpec& spec);

// Episode of a fixed controller on `env` (controller is reset first).
EpisodeStats run_episode(Environment& env, Controller& controller, std::uint64_t episode);

// metrics.csv schema.
std::string metrics_header();
void append_metrics(std::ostream& os, std::uint64_t seed, long episode, const EpisodeStats& stats);

std::string summary_header();
void append_summary(std::ostream& os, std::uint64_t seed, long episode, const EpisodeStats& stats, double epsilon);

struct TtiAggregate {
  int tti = 0;
  int runs = 0;
  double v_succ = 0.0;
  double arrivals = 0.0;
  std::array<double, kNumGroups> v_succ_group{};
  std::array<double, kNumGroups> n_repe{};
  std::array<double, kNumGroups> rao{};
};

// Per-TTI means across every (seed, episode) in the given metrics files.
// Pure function of the file contents; throws ConfigError on a schema mismatch.
std::vector<TtiAggregate> summarize(const std::vector<std::string>& metrics_files);
std::vector<TtiAggregate> summarize_streams(std::vector<std::istream*> streams);
std::string format_summary(const std::vector<TtiAggregate>& rows);

}  // namespace nbiot::experiment
