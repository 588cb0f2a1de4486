#pragma once

#include <array>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nbiot/config.hpp"
#include "nbiot/rach.hpp"
#include "nbiot/rng.hpp"
#include "nbiot/sched.hpp"
#include "nbiot/traffic.hpp"

namespace nbiot {

struct GroupObservation {
  int v_cp = 0;
  int v_sp = 0;
  int v_ip = 0;
  int v_succ = 0;
  int v_unsc = 0;

  friend bool operator==(const GroupObservation&, const GroupObservation&) = default;
};

// eNB-observable counters of one TTI, per CE group.
struct ObservationU {
  std::array<GroupObservation, kNumGroups> groups{};

  GroupObservation& operator[](int g) { return groups[static_cast<std::size_t>(g)]; }
  const GroupObservation& operator[](int g) const { return groups[static_cast<std::size_t>(g)]; }

  friend bool operator==(const ObservationU&, const ObservationU&) = default;
};

struct HistoryEntry {
  ObservationU obs;
  ActionVector action;
};

using StateVector = std::vector<double>;

inline constexpr int kFeaturesPerTti = 24;

int state_size(const SimConfig& cfg);

// Flattens the window oldest-first into [U, A, U, A, ...], zero-padding the
// leading TTIs when fewer than history_window entries exist. Every entry
// lies in [0, 1].
StateVector build_state(std::span<const HistoryEntry> history, const SimConfig& cfg);

struct TtiRecord {
  int tti = 0;
  ObservationU obs;
  ActionVector action;
  double reward = 0.0;
  std::array<int, kNumGroups> arrivals{};
  std::array<int, kNumGroups> drops_rach{};
  std::array<int, kNumGroups> drops_rrc{};
  long r_rach = 0;
  long r_data = 0;
};

struct EpisodeStats {
  std::vector<TtiRecord> ttis;

  double total_reward() const;
};

// Per-(tti, group) CSV with the columns
// tti,group,v_cp,v_sp,v_ip,v_succ,v_unsc,n_rach,f_prea,n_repe,reward,arrivals,drops_rach,drops_rrc
std::string episode_stats_csv(const EpisodeStats& stats);

struct StepResult {
  ObservationU obs;
  double reward = 0.0;
  StateVector state;
  bool terminal = false;
};

// One cell, one episode at a time. Strictly sequential.
class Environment {
 public:
  explicit Environment(SimConfig cfg);

  // Fresh population and traffic for the given episode; all randomness is
  // derived from (cfg.seed, episode).
  StateVector reset(std::uint64_t episode = 0);

  StepResult step(const ActionVector& a);

  const SimConfig& config() const { return cfg_; }
  // Next TTI to execute, 1-based.
  int tti() const { return tti_; }
  bool terminal() const { return tti_ > cfg_.n_tti_per_episode; }
  const traffic::Population& population() const { return pop_; }
  const sched::PendingQueue& pending() const { return pending_; }
  const EpisodeStats& stats() const { return stats_; }
  std::span<const HistoryEntry> history() const;
  StateVector state() const;
  int uplink_budget() const { return r_uplink_; }

  // Replaces the fading-based detector (e.g. to force detection in tests).
  void set_detector(rach::Detector d) { detector_override_ = std::move(d); }

 private:
  SimConfig cfg_;
  int r_uplink_ = 0;
  int tti_ = 1;
  traffic::Population pop_;
  sched::PendingQueue pending_;
  std::vector<HistoryEntry> history_;
  EpisodeStats stats_;
  RngStream fading_rng_;
  RngStream choice_rng_;
  RngStream sched_rng_;
  std::optional<rach::Detector> detector_override_;
};

}  // namespace nbiot
