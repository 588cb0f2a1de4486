#include "nbiot/rach.hpp"

#include <numeric>

#include "nbiot/phy.hpp"

namespace nbiot::rach {

SlotResult classify_preamble(std::span<const Chooser> choosers) {
  if (choosers.empty()) return {};
  if (choosers.size() == 1) {
    if (choosers[0].detected) return {SlotKind::kSuccess, choosers[0].device};
    return {};
  }
  for (const auto& c : choosers) {
    if (c.detected) return {SlotKind::kCollision, -1};
  }
  return {};
}

Detector fading_detector(const SimConfig& cfg, RngStream& rng) {
  return [&cfg, &rng](const traffic::Device& d, int n_repe) {
    const auto link = phy::make_link(d.distance_km, d.ce_group, cfg);
    return phy::sample_detection(link, n_repe, cfg, rng);
  };
}

RachOutcome run_rach_group(std::span<const traffic::Device* const> devices, int group, const GroupAction& ga,
                           RngStream& choice_rng, const Detector& detect) {
  const int slots = ga.n_rach * ga.f_prea;
  if (slots <= 0) throw ContractViolation("run_rach_group: empty slot set");

  std::vector<int> slot_of(devices.size());
  std::vector<Chooser> choosers(devices.size());
  std::vector<int> offset(static_cast<std::size_t>(slots) + 1, 0);

  for (std::size_t i = 0; i < devices.size(); ++i) {
    const auto& d = *devices[i];
    if (d.ce_group != group) throw ContractViolation("run_rach_group: device from another CE group");
    if (d.state != traffic::DeviceState::kBacklogged) {
      throw ContractViolation("run_rach_group: device is not backlogged");
    }
    const int period = choice_rng.below(ga.n_rach);
    const int preamble = choice_rng.below(ga.f_prea);
    slot_of[i] = period * ga.f_prea + preamble;
    ++offset[static_cast<std::size_t>(slot_of[i]) + 1];
  }
  std::partial_sum(offset.begin(), offset.end(), offset.begin());

  // Bucket choosers by slot, keeping input order within a slot.
  std::vector<int> fill(offset.begin(), offset.end() - 1);
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const int pos = fill[static_cast<std::size_t>(slot_of[i])]++;
    choosers[static_cast<std::size_t>(pos)] = {static_cast<int>(i), detect(*devices[i], ga.n_repe)};
  }

  RachOutcome out;
  out.devices.resize(devices.size());
  for (int s = 0; s < slots; ++s) {
    const auto b = static_cast<std::size_t>(offset[static_cast<std::size_t>(s)]);
    const auto e = static_cast<std::size_t>(offset[static_cast<std::size_t>(s) + 1]);
    std::span<const Chooser> in_slot(choosers.data() + b, e - b);
    switch (classify_preamble(in_slot).kind) {
      case SlotKind::kSuccess: ++out.counters.v_sp; break;
      case SlotKind::kCollision: ++out.counters.v_cp; break;
      case SlotKind::kIdle: ++out.counters.v_ip; break;
    }
    for (const auto& c : in_slot) {
      DeviceOutcome o;
      if (in_slot.size() >= 2) {
        o = DeviceOutcome::kCollisionFail;
      } else {
        o = c.detected ? DeviceOutcome::kSuccess : DeviceOutcome::kDetectionFail;
      }
      out.devices[static_cast<std::size_t>(c.device)] = {devices[static_cast<std::size_t>(c.device)]->id, o};
    }
  }
  return out;
}

}  // namespace nbiot::rach
