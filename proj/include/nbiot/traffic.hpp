#pragma once

#include <array>
#include <span>
#include <vector>

#include "nbiot/config.hpp"
#include "nbiot/rng.hpp"

namespace nbiot::traffic {

enum class DeviceState { kIdle, kBacklogged, kConnectedWaiting, kServed, kDropped };

inline constexpr int kNumStates = 5;

struct Device {
  int id = 0;
  double distance_km = 0.0;
  int initial_group = 0;
  int ce_group = 0;
  DeviceState state = DeviceState::kIdle;
  int attempts_in_ce = 0;
  int attempts_total = 0;
  int rrc_wait = 0;
  int activation_tti = 0;
  // First TTI at which a Backlogged device may transmit again.
  int next_attempt_tti = 0;
};

struct TrafficProfile {
  double beta_a = 3.0;
  double beta_b = 4.0;
  int n_tti = 937;
};

// Probability that a packet is generated in TTI t (index t-1), i.e. the
// Beta density integrated over [(t-1)/N, t/N].
std::vector<double> activation_masses(const TrafficProfile& profile);

// One activation TTI in [1, n_tti] per device.
std::vector<int> sample_activation_ttis(int n_devices, const TrafficProfile& profile, RngStream& rng);

Device register_rach_failure(Device d, const SimConfig& cfg, int tti);
Device register_rach_success(Device d);

// Device population of one episode with an activation index per TTI.
class Population {
 public:
  Population() = default;
  Population(std::vector<Device> devices, int n_tti);

  std::span<Device> devices() { return devices_; }
  std::span<const Device> devices() const { return devices_; }
  Device& operator[](int id) { return devices_[static_cast<std::size_t>(id)]; }
  const Device& operator[](int id) const { return devices_[static_cast<std::size_t>(id)]; }
  int size() const { return static_cast<int>(devices_.size()); }

  // Activates the devices scheduled for TTI t and returns every Backlogged
  // device whose backoff has elapsed, ascending by id. Newly activated
  // devices are also reported through `arrivals` (per initial group).
  std::vector<int> backlogged_at(int t, std::array<int, kNumGroups>* arrivals = nullptr);

  std::array<int, kNumStates> state_counts() const;

 private:
  std::vector<Device> devices_;
  std::vector<std::vector<int>> activations_;  // by TTI, 1-based
  std::vector<int> backlog_;
};

struct ExpiryResult {
  std::vector<int> retained;
  std::vector<int> dropped;
};

// Advances the RRC wait of every unserved ConnectedWaiting device; those
// reaching max_rrc_wait are dropped.
ExpiryResult expire_rrc(Population& pop, std::span<const int> unserved, const SimConfig& cfg);

// CSV (tti,device_id) of the activation schedule, sorted by TTI then id.
std::string activation_schedule_csv(const Population& pop);

}  // namespace nbiot::traffic
