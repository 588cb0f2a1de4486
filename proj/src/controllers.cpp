#include "nbiot/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace nbiot {

ActionVector random_action(const SimConfig& cfg, RngStream& rng) {
  auto pick = [&rng](const std::vector<int>& set) {
    return set[static_cast<std::size_t>(rng.below(static_cast<int>(set.size())))];
  };
  ActionVector a;
  for (auto& g : a.groups) {
    g.n_rach = pick(cfg.rach_set);
    g.f_prea = pick(cfg.prea_set);
    g.n_repe = pick(cfg.repe_set);
  }
  return a;
}

namespace le_urc {
namespace {

double zeta_real(int f_prea, double v_idle, double cap) {
  if (v_idle <= 0.0) return cap;
  if (v_idle >= f_prea) return 0.0;
  const double f = f_prea;
  return std::log(v_idle / f) / std::log((f - 1.0) / f);
}

}  // namespace

double zeta(int f_prea, int v_idle, double cap) { return zeta_real(f_prea, v_idle, cap); }

double estimate_attempters(int v_coll, double zeta_value, double delta, double cap) {
  const double est = std::max(2.0 * v_coll, zeta_value + delta);
  return std::clamp(est, 0.0, cap);
}

double expected_requests(double n, int f_prea, int v_unsc_prev) {
  if (n <= 0.0) return v_unsc_prev;
  return n * std::pow(1.0 - 1.0 / f_prea, n - 1.0) + v_unsc_prev;
}

LoadEstimate estimate_load(const GroupObservation& obs, int f_prea, int n_rach, const LoadEstimate& prev,
                           double cap) {
  LoadEstimate next;
  // Idle count is pooled over the periods; invert per period and scale up.
  const double idle_per_period = static_cast<double>(obs.v_ip) / n_rach;
  next.zeta_prev = std::min(cap, n_rach * zeta_real(f_prea, idle_per_period, cap));
  next.delta = prev.updates >= 2 ? prev.d_hat - prev.d_hat_prev : 0.0;
  next.d_hat = estimate_attempters(obs.v_cp, next.zeta_prev, next.delta, cap);
  next.d_hat_prev = prev.d_hat;
  next.updates = prev.updates + 1;
  return next;
}

Candidate evaluate(const std::array<int, kNumGroups>& f_prea, const std::array<double, kNumGroups>& d_hat,
                   const std::array<int, kNumGroups>& v_unsc_prev, const std::array<int, kNumGroups>& n_repe,
                   int n_rach, const SimConfig& cfg) {
  Candidate c;
  c.f_prea = f_prea;
  for (int g = 0; g < kNumGroups; ++g) {
    c.r_rach += static_cast<long>(cfg.b_rach) * n_rach * n_repe[static_cast<std::size_t>(g)] *
                f_prea[static_cast<std::size_t>(g)];
  }
  const double residual = std::max(0.0, static_cast<double>(uplink_re_budget(cfg) - c.r_rach));
  for (int g = 0; g < kNumGroups; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    const double v_up = residual / (static_cast<double>(cfg.b_data) * n_repe[gi]);
    c.objective += std::min(expected_requests(d_hat[gi], f_prea[gi], v_unsc_prev[gi]), v_up);
  }
  return c;
}

ActionVector decide(const std::array<double, kNumGroups>& d_hat, const std::array<int, kNumGroups>& v_unsc_prev,
                    const std::array<int, kNumGroups>& n_repe, int n_rach, const SimConfig& cfg) {
  constexpr double kTieTol = 1e-9;
  std::optional<Candidate> best;
  for (int f0 : cfg.prea_set) {
    for (int f1 : cfg.prea_set) {
      for (int f2 : cfg.prea_set) {
        auto c = evaluate({f0, f1, f2}, d_hat, v_unsc_prev, n_repe, n_rach, cfg);
        if (!best) {
          best = c;
          continue;
        }
        // Enumeration is lexicographic, so an exact tie on both keys keeps
        // the earlier (smaller) triple.
        if (c.objective > best->objective + kTieTol ||
            (std::abs(c.objective - best->objective) <= kTieTol && c.r_rach < best->r_rach)) {
          best = c;
        }
      }
    }
  }
  ActionVector a;
  for (int g = 0; g < kNumGroups; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    a[g] = {n_rach, best->f_prea[gi], n_repe[gi]};
  }
  return a;
}

}  // namespace le_urc

LeUrcController::LeUrcController(const SimConfig& cfg, std::array<int, kNumGroups> n_repe, int n_rach)
    : cfg_(cfg), n_repe_(n_repe), n_rach_(n_rach) {}

void LeUrcController::reset() {
  est_ = {};
  v_unsc_ = {};
}

ActionVector LeUrcController::decide() {
  std::array<double, kNumGroups> d_hat{};
  for (int g = 0; g < kNumGroups; ++g) d_hat[static_cast<std::size_t>(g)] = est_[static_cast<std::size_t>(g)].d_hat;
  return le_urc::decide(d_hat, v_unsc_, n_repe_, n_rach_, cfg_);
}

void LeUrcController::observe(const ObservationU& obs, const ActionVector& a, double) {
  const double cap = cfg_.n_devices;
  for (int g = 0; g < kNumGroups; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    est_[gi] = le_urc::estimate_load(obs[g], a[g].f_prea, a[g].n_rach, est_[gi], cap);
    v_unsc_[gi] = obs[g].v_unsc;
  }
}

}  // namespace nbiot
