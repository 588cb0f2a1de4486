#include "nbiot/sched.hpp"

#include <algorithm>

namespace nbiot::sched {

ScheduleResult admit_prefix(std::span<const PendingEntry> ordered, long budget) {
  ScheduleResult r;
  std::size_t i = 0;
  for (; i < ordered.size(); ++i) {
    if (r.used + ordered[i].cost > budget) break;
    r.used += ordered[i].cost;
  }
  r.served.assign(ordered.begin(), ordered.begin() + static_cast<std::ptrdiff_t>(i));
  r.unserved.assign(ordered.begin() + static_cast<std::ptrdiff_t>(i), ordered.end());
  return r;
}

ScheduleResult schedule_data(PendingQueue queue, long budget, RngStream& rng) {
  if (budget < 0) throw ContractViolation("schedule_data: negative budget");
  shuffle(std::span<PendingEntry>(queue), rng);
  return admit_prefix(queue, budget);
}

PendingQueue carryover_unserved(std::span<const PendingEntry> unserved, traffic::Population& pop,
                                const SimConfig& cfg, std::vector<int>* dropped) {
  std::vector<int> ids;
  ids.reserve(unserved.size());
  for (const auto& e : unserved) ids.push_back(e.device);
  auto expiry = traffic::expire_rrc(pop, ids, cfg);
  if (dropped) dropped->insert(dropped->end(), expiry.dropped.begin(), expiry.dropped.end());

  PendingQueue next;
  next.reserve(expiry.retained.size());
  for (const auto& e : unserved) {
    if (pop[e.device].state == traffic::DeviceState::kConnectedWaiting) next.push_back(e);
  }
  return next;
}

}  // namespace nbiot::sched
