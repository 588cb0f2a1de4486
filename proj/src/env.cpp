#include "nbiot/env.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "nbiot/phy.hpp"

namespace nbiot {
namespace {

int index_of(const std::vector<int>& set, int v) {
  auto it = std::find(set.begin(), set.end(), v);
  if (it == set.end()) throw ContractViolation("action value not in its configured set");
  return static_cast<int>(it - set.begin());
}

double action_feature(const std::vector<int>& set, int v) {
  return static_cast<double>(index_of(set, v) + 1) / static_cast<double>(set.size());
}

}  // namespace

int state_size(const SimConfig& cfg) { return cfg.history_window * kFeaturesPerTti; }

StateVector build_state(std::span<const HistoryEntry> history, const SimConfig& cfg) {
  const int window = cfg.history_window;
  StateVector s(static_cast<std::size_t>(state_size(cfg)), 0.0);
  const double slot_scale = static_cast<double>(cfg.rach_set.back()) * cfg.prea_set.back();
  const double count_scale = cfg.state_count_cap;
  auto clip = [](double x) { return std::clamp(x, 0.0, 1.0); };

  const int n = std::min<int>(window, static_cast<int>(history.size()));
  const auto recent = history.subspan(history.size() - static_cast<std::size_t>(n));
  for (int e = 0; e < n; ++e) {
    auto pos = static_cast<std::size_t>((window - n + e) * kFeaturesPerTti);
    const auto& h = recent[static_cast<std::size_t>(e)];
    for (const auto& g : h.obs.groups) {
      s[pos++] = clip(g.v_cp / slot_scale);
      s[pos++] = clip(g.v_sp / slot_scale);
      s[pos++] = clip(g.v_ip / slot_scale);
      s[pos++] = clip(g.v_succ / count_scale);
      s[pos++] = clip(g.v_unsc / count_scale);
    }
    for (const auto& ga : h.action.groups) {
      s[pos++] = action_feature(cfg.rach_set, ga.n_rach);
      s[pos++] = action_feature(cfg.prea_set, ga.f_prea);
      s[pos++] = action_feature(cfg.repe_set, ga.n_repe);
    }
  }
  return s;
}

double EpisodeStats::total_reward() const {
  return std::accumulate(ttis.begin(), ttis.end(), 0.0,
                         [](double acc, const TtiRecord& r) { return acc + r.reward; });
}

std::string episode_stats_csv(const EpisodeStats& stats) {
  std::ostringstream os;
  os << "tti,group,v_cp,v_sp,v_ip,v_succ,v_unsc,n_rach,f_prea,n_repe,reward,arrivals,drops_rach,drops_rrc\n";
  for (const auto& r : stats.ttis) {
    for (int g = 0; g < kNumGroups; ++g) {
      const auto& o = r.obs[g];
      const auto& a = r.action[g];
      const auto gi = static_cast<std::size_t>(g);
      os << r.tti << ',' << g << ',' << o.v_cp << ',' << o.v_sp << ',' << o.v_ip << ',' << o.v_succ << ','
         << o.v_unsc << ',' << a.n_rach << ',' << a.f_prea << ',' << a.n_repe << ',' << r.reward << ','
         << r.arrivals[gi] << ',' << r.drops_rach[gi] << ',' << r.drops_rrc[gi] << '\n';
    }
  }
  return os.str();
}

Environment::Environment(SimConfig cfg) : cfg_(std::move(cfg)) {
  require_valid(cfg_);
  r_uplink_ = uplink_re_budget(cfg_);
}

StateVector Environment::reset(std::uint64_t episode) {
  RngStream placement(cfg_.seed, Stream::kPlacement, episode);
  RngStream traffic_rng(cfg_.seed, Stream::kTraffic, episode);
  fading_rng_ = RngStream(cfg_.seed, Stream::kFading, episode);
  choice_rng_ = RngStream(cfg_.seed, Stream::kPreambleChoice, episode);
  sched_rng_ = RngStream(cfg_.seed, Stream::kSchedulingOrder, episode);

  const auto distances = phy::place_devices(cfg_.n_devices, cfg_.cell_radius_km, placement);
  const auto activations = traffic::sample_activation_ttis(
      cfg_.n_devices, {cfg_.beta_a, cfg_.beta_b, cfg_.n_tti_per_episode}, traffic_rng);

  std::vector<traffic::Device> devices(static_cast<std::size_t>(cfg_.n_devices));
  for (int i = 0; i < cfg_.n_devices; ++i) {
    auto& d = devices[static_cast<std::size_t>(i)];
    d.id = i;
    d.distance_km = distances[static_cast<std::size_t>(i)];
    d.initial_group = phy::assign_ce_group(d.distance_km, cfg_);
    d.ce_group = d.initial_group;
    d.activation_tti = activations[static_cast<std::size_t>(i)];
  }
  pop_ = traffic::Population(std::move(devices), cfg_.n_tti_per_episode);
  pending_.clear();
  history_.clear();
  stats_ = {};
  stats_.ttis.reserve(static_cast<std::size_t>(cfg_.n_tti_per_episode));
  tti_ = 1;
  return state();
}

std::span<const HistoryEntry> Environment::history() const { return history_; }

StateVector Environment::state() const { return build_state(history_, cfg_); }

StepResult Environment::step(const ActionVector& a) {
  if (terminal()) throw ContractViolation("step called on a terminal episode");
  if (!is_valid_action(a, cfg_)) throw ContractViolation("step: action outside the configured sets");

  const int t = tti_;
  TtiRecord rec;
  rec.tti = t;
  rec.action = a;

  // (1) backlogged devices per current CE group
  const auto ready = pop_.backlogged_at(t, &rec.arrivals);
  std::array<std::vector<const traffic::Device*>, kNumGroups> by_group;
  for (int id : ready) {
    const auto& d = pop_[id];
    by_group[static_cast<std::size_t>(d.ce_group)].push_back(&d);
  }

  // (2) contention per group
  const rach::Detector detector =
      detector_override_ ? *detector_override_ : rach::fading_detector(cfg_, fading_rng_);
  std::array<rach::RachOutcome, kNumGroups> outcomes;
  for (int g = 0; g < kNumGroups; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    outcomes[gi] = rach::run_rach_group(by_group[gi], g, a[g], choice_rng_, detector);
    rec.obs[g].v_cp = outcomes[gi].counters.v_cp;
    rec.obs[g].v_sp = outcomes[gi].counters.v_sp;
    rec.obs[g].v_ip = outcomes[gi].counters.v_ip;
  }

  // (3) resource split
  rec.r_rach = rach_re_cost(a, cfg_);
  rec.r_data = std::max(0L, r_uplink_ - rec.r_rach);

  // (4) queue RACH successes behind carried-over devices and schedule
  for (int g = 0; g < kNumGroups; ++g) {
    for (const auto& r : outcomes[static_cast<std::size_t>(g)].devices) {
      if (r.outcome != rach::DeviceOutcome::kSuccess) continue;
      pop_[r.device] = traffic::register_rach_success(pop_[r.device]);
      pending_.push_back({r.device, g, data_re_per_device(g, a, cfg_)});
    }
  }
  auto sched = sched::schedule_data(std::move(pending_), rec.r_data, sched_rng_);
  for (const auto& e : sched.served) {
    pop_[e.device].state = traffic::DeviceState::kServed;
    ++rec.obs[e.group].v_succ;
  }

  // (5) RACH failures, escalation, drops; RRC expiry of the unserved
  for (int g = 0; g < kNumGroups; ++g) {
    for (const auto& r : outcomes[static_cast<std::size_t>(g)].devices) {
      if (r.outcome == rach::DeviceOutcome::kSuccess) continue;
      pop_[r.device] = traffic::register_rach_failure(pop_[r.device], cfg_, t);
      if (pop_[r.device].state == traffic::DeviceState::kDropped) ++rec.drops_rach[static_cast<std::size_t>(g)];
    }
  }
  std::vector<int> rrc_dropped;
  pending_ = sched::carryover_unserved(sched.unserved, pop_, cfg_, &rrc_dropped);
  for (int id : rrc_dropped) {
    auto it = std::find_if(sched.unserved.begin(), sched.unserved.end(),
                           [id](const sched::PendingEntry& e) { return e.device == id; });
    ++rec.drops_rrc[static_cast<std::size_t>(it->group)];
  }
  for (const auto& e : pending_) ++rec.obs[e.group].v_unsc;

  // (6) shared reward
  for (const auto& g : rec.obs.groups) rec.reward += g.v_succ;

  // (7) history window
  history_.push_back({rec.obs, a});
  if (history_.size() > static_cast<std::size_t>(cfg_.history_window)) history_.erase(history_.begin());
  stats_.ttis.push_back(rec);
  ++tti_;

  return {rec.obs, rec.reward, state(), terminal()};
}

}  // namespace nbiot
