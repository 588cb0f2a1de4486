#pragma once

#include <functional>
#include <span>
#include <vector>

#include "nbiot/config.hpp"
#include "nbiot/rng.hpp"
#include "nbiot/traffic.hpp"

namespace nbiot::rach {

enum class DeviceOutcome { kSuccess, kCollisionFail, kDetectionFail };

struct GroupCounters {
  int v_cp = 0;  // collided preambles
  int v_sp = 0;  // successfully received preambles
  int v_ip = 0;  // idle preambles (as seen by the eNB)
};

struct DeviceResult {
  int device = 0;
  DeviceOutcome outcome = DeviceOutcome::kDetectionFail;
};

struct RachOutcome {
  GroupCounters counters;
  std::vector<DeviceResult> devices;  // in input order
};

struct Chooser {
  int device = 0;
  bool detected = false;
};

enum class SlotKind { kIdle, kSuccess, kCollision };

struct SlotResult {
  SlotKind kind = SlotKind::kIdle;
  int device = -1;  // the winner when kind == kSuccess
};

// eNB view of one (period, preamble) slot. A collision is only visible if
// at least one of the colliding copies is detected.
SlotResult classify_preamble(std::span<const Chooser> choosers);

// Decides whether the eNB detects one device's preamble.
using Detector = std::function<bool(const traffic::Device&, int n_repe)>;

// Detector drawing Rayleigh fading from `rng` with the device's link budget.
Detector fading_detector(const SimConfig& cfg, RngStream& rng);

// Contention of the given backlogged devices (all in one CE group) on
// n_rach x f_prea slots.
RachOutcome run_rach_group(std::span<const traffic::Device* const> devices, int group, const GroupAction& ga,
                           RngStream& choice_rng, const Detector& detect);

}  // namespace nbiot::rach
