#pragma once

#include <array>
#include <memory>

#include "nbiot/config.hpp"
#include "nbiot/env.hpp"
#include "nbiot/rng.hpp"

namespace nbiot {

// Chooses the configuration of the next TTI from past observations.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual void reset() {}
  virtual ActionVector decide() = 0;
  // Feedback for the TTI that just ran with action `a`.
  virtual void observe(const ObservationU& obs, const ActionVector& a, double reward) = 0;
};

class StaticController final : public Controller {
 public:
  explicit StaticController(ActionVector fixed) : fixed_(fixed) {}
  ActionVector decide() override { return fixed_; }
  void observe(const ObservationU&, const ActionVector&, double) override {}

 private:
  ActionVector fixed_;
};

// Uniform draw from the configured action sets every TTI.
ActionVector random_action(const SimConfig& cfg, RngStream& rng);

class RandomController final : public Controller {
 public:
  RandomController(const SimConfig& cfg, RngStream rng) : cfg_(cfg), rng_(rng) {}
  ActionVector decide() override { return random_action(cfg_, rng_); }
  void observe(const ObservationU&, const ActionVector&, double) override {}

 private:
  SimConfig cfg_;
  RngStream rng_;
};

namespace le_urc {

// Moment-matching inversion of the idle-preamble count:
// log base (f-1)/f of (v_idle / f). v_idle = 0 maps to `cap`, v_idle >= f to 0.
double zeta(int f_prea, int v_idle, double cap);

// max{2 v_coll, zeta + delta}, clamped to [0, cap].
double estimate_attempters(int v_coll, double zeta_value, double delta, double cap);

// n (1 - 1/f)^(n-1) + v_unsc, real-valued n.
double expected_requests(double n, int f_prea, int v_unsc_prev);

struct LoadEstimate {
  double d_hat = 0.0;       // estimate for the coming TTI
  double d_hat_prev = 0.0;  // estimate one TTI earlier
  double zeta_prev = 0.0;
  double delta = 0.0;
  int updates = 0;
};

// Rolls the per-group estimate forward with the counters of the TTI just
// observed, which used `f_prea` preambles in each of `n_rach` periods.
LoadEstimate estimate_load(const GroupObservation& obs, int f_prea, int n_rach, const LoadEstimate& prev,
                           double cap);

struct Candidate {
  std::array<int, kNumGroups> f_prea{};
  long r_rach = 0;
  double objective = 0.0;
};

// Objective of one joint preamble choice given fixed repetitions/periods.
Candidate evaluate(const std::array<int, kNumGroups>& f_prea, const std::array<double, kNumGroups>& d_hat,
                   const std::array<int, kNumGroups>& v_unsc_prev, const std::array<int, kNumGroups>& n_repe,
                   int n_rach, const SimConfig& cfg);

// Exhaustive search over prea_set^3; ties go to smaller R_RACH, then to the
// lexicographically smaller preamble triple.
ActionVector decide(const std::array<double, kNumGroups>& d_hat, const std::array<int, kNumGroups>& v_unsc_prev,
                    const std::array<int, kNumGroups>& n_repe, int n_rach, const SimConfig& cfg);

}  // namespace le_urc

// Load-estimation based uplink resource configuration: adapts only the
// per-group preamble count; repetitions and RACH periods stay fixed.
class LeUrcController final : public Controller {
 public:
  LeUrcController(const SimConfig& cfg, std::array<int, kNumGroups> n_repe, int n_rach = 1);

  void reset() override;
  ActionVector decide() override;
  void observe(const ObservationU& obs, const ActionVector& a, double reward) override;

  const std::array<le_urc::LoadEstimate, kNumGroups>& estimates() const { return est_; }

 private:
  SimConfig cfg_;
  std::array<int, kNumGroups> n_repe_;
  int n_rach_;
  std::array<le_urc::LoadEstimate, kNumGroups> est_{};
  std::array<int, kNumGroups> v_unsc_{};
};

}  // namespace nbiot
