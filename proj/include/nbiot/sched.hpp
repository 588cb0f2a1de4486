#pragma once

#include <span>
#include <vector>

#include "nbiot/rng.hpp"
#include "nbiot/traffic.hpp"

namespace nbiot::sched {

// A device that completed RACH and waits for data resources. The cost is
// fixed at the TTI of RACH success (B_DATA x n_repe of that TTI).
struct PendingEntry {
  int device = 0;
  int group = 0;
  int cost = 0;

  friend bool operator==(const PendingEntry&, const PendingEntry&) = default;
};

using PendingQueue = std::vector<PendingEntry>;

struct ScheduleResult {
  // served followed by unserved is the shuffled queue order.
  std::vector<PendingEntry> served;
  std::vector<PendingEntry> unserved;
  long used = 0;
};

// Longest prefix of `ordered` whose total cost fits the budget.
ScheduleResult admit_prefix(std::span<const PendingEntry> ordered, long budget);

// Random-order first-blocking scheduler.
ScheduleResult schedule_data(PendingQueue queue, long budget, RngStream& rng);

// Applies RRC expiry to the unserved entries and returns the queue for the
// next TTI (dropped devices removed). Dropped ids are appended to `dropped`.
PendingQueue carryover_unserved(std::span<const PendingEntry> unserved, traffic::Population& pop,
                                const SimConfig& cfg, std::vector<int>* dropped = nullptr);

}  // namespace nbiot::sched
