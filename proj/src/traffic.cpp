#include "nbiot/traffic.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <numeric>
#include <sstream>

namespace nbiot::traffic {

std::vector<double> activation_masses(const TrafficProfile& profile) {
  if (profile.n_tti < 1) throw ContractViolation("traffic profile needs at least one TTI");
  std::vector<double> mass(static_cast<std::size_t>(profile.n_tti));
  double prev = 0.0;
  for (int t = 1; t <= profile.n_tti; ++t) {
    const double x = static_cast<double>(t) / profile.n_tti;
    const double cdf = t == profile.n_tti ? 1.0 : boost::math::ibeta(profile.beta_a, profile.beta_b, x);
    mass[static_cast<std::size_t>(t - 1)] = cdf - prev;
    prev = cdf;
  }
  return mass;
}

std::vector<int> sample_activation_ttis(int n_devices, const TrafficProfile& profile, RngStream& rng) {
  auto mass = activation_masses(profile);
  std::vector<double> cdf(mass.size());
  std::partial_sum(mass.begin(), mass.end(), cdf.begin());
  cdf.back() = 1.0;
  std::vector<int> out(static_cast<std::size_t>(std::max(n_devices, 0)));
  for (auto& t : out) {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    t = static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), profile.n_tti - 1)) + 1;
  }
  return out;
}

Device register_rach_failure(Device d, const SimConfig& cfg, int tti) {
  if (d.state != DeviceState::kBacklogged) {
    throw ContractViolation("register_rach_failure on a device that is not backlogged");
  }
  ++d.attempts_total;
  ++d.attempts_in_ce;
  if (d.attempts_total >= cfg.max_attempts) {
    d.state = DeviceState::kDropped;
    d.attempts_in_ce = std::min(d.attempts_in_ce, cfg.max_attempts_per_ce);
    return d;
  }
  if (d.attempts_in_ce >= cfg.max_attempts_per_ce) {
    if (d.ce_group < kNumGroups - 1) {
      ++d.ce_group;
      d.attempts_in_ce = 0;
    } else {
      // Top group: keep trying until the global limit.
      d.attempts_in_ce = cfg.max_attempts_per_ce;
    }
  }
  d.next_attempt_tti = tti + 1 + cfg.backoff_ttis;
  return d;
}

Device register_rach_success(Device d) {
  if (d.state != DeviceState::kBacklogged) {
    throw ContractViolation("register_rach_success on a device that is not backlogged");
  }
  d.state = DeviceState::kConnectedWaiting;
  d.rrc_wait = 0;
  return d;
}

Population::Population(std::vector<Device> devices, int n_tti)
    : devices_(std::move(devices)), activations_(static_cast<std::size_t>(n_tti) + 2) {
  for (const auto& d : devices_) {
    if (d.state == DeviceState::kIdle && d.activation_tti >= 1 && d.activation_tti <= n_tti) {
      activations_[static_cast<std::size_t>(d.activation_tti)].push_back(d.id);
    } else if (d.state == DeviceState::kBacklogged) {
      backlog_.push_back(d.id);
    }
  }
}

std::vector<int> Population::backlogged_at(int t, std::array<int, kNumGroups>* arrivals) {
  if (t >= 1 && static_cast<std::size_t>(t) < activations_.size()) {
    for (int id : activations_[static_cast<std::size_t>(t)]) {
      auto& d = (*this)[id];
      if (d.state != DeviceState::kIdle) continue;
      d.state = DeviceState::kBacklogged;
      d.next_attempt_tti = t;
      backlog_.push_back(id);
      if (arrivals) ++(*arrivals)[static_cast<std::size_t>(d.initial_group)];
    }
  }
  // Compact away devices that left the Backlogged state since last call.
  std::erase_if(backlog_, [&](int id) { return (*this)[id].state != DeviceState::kBacklogged; });
  std::sort(backlog_.begin(), backlog_.end());

  std::vector<int> ready;
  for (int id : backlog_) {
    if ((*this)[id].next_attempt_tti <= t) ready.push_back(id);
  }
  return ready;
}

std::array<int, kNumStates> Population::state_counts() const {
  std::array<int, kNumStates> c{};
  for (const auto& d : devices_) ++c[static_cast<std::size_t>(d.state)];
  return c;
}

ExpiryResult expire_rrc(Population& pop, std::span<const int> unserved, const SimConfig& cfg) {
  ExpiryResult r;
  for (int id : unserved) {
    auto& d = pop[id];
    if (d.state != DeviceState::kConnectedWaiting) continue;
    ++d.rrc_wait;
    if (d.rrc_wait >= cfg.max_rrc_wait) {
      d.state = DeviceState::kDropped;
      r.dropped.push_back(id);
    } else {
      r.retained.push_back(id);
    }
  }
  return r;
}

std::string activation_schedule_csv(const Population& pop) {
  std::vector<std::pair<int, int>> rows;
  for (const auto& d : pop.devices()) rows.emplace_back(d.activation_tti, d.id);
  std::sort(rows.begin(), rows.end());
  std::ostringstream os;
  os << "tti,device_id\n";
  for (auto [t, id] : rows) os << t << ',' << id << '\n';
  return os.str();
}

}  // namespace nbiot::traffic
