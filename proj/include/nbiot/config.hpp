#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nbiot {

inline constexpr int kNumGroups = 3;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a caller breaks an operation's precondition (wrong device
// state, step after terminal, dimension mismatch, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Simulation parameters. Defaults reproduce the reference NB-IoT cell
// (12 km radius, 30000 devices, 937 TTIs of 640 ms).
struct SimConfig {
  double cell_radius_km = 12.0;
  int n_devices = 30000;
  int n_tti_per_episode = 937;
  int tti_ms = 640;

  double path_loss_exponent = 4.0;
  double noise_power_dbm = -138.0;
  double snr_threshold_db = 0.0;
  // Target received power of group-0 path-loss inversion, stored in dBm.
  double power_ctrl_target_db = 120.0;
  double bcast_power_dbm = 35.0;
  double max_tx_power_dbm = 23.0;
  double rsrp_threshold1_dbm = 0.0;
  double rsrp_threshold2_dbm = -5.0;

  int max_attempts_per_ce = 5;  // gamma_pCE
  int max_attempts = 10;        // gamma_pMax
  int max_rrc_wait = 5;         // gamma_RRC
  int b_rach = 4;
  int b_data = 32;

  std::vector<int> prea_set{12, 24, 36, 48};
  std::vector<int> repe_set{1, 2, 4, 8, 16, 32};
  std::vector<int> rach_set{1, 2, 4};

  double beta_a = 3.0;
  double beta_b = 4.0;

  // Uniform shift of every uplink preamble link; 0 keeps the literal budget.
  double snr_offset_db = 0.0;
  int backoff_ttis = 0;
  int history_window = 4;
  // Device counters in the learning state are divided by this and clipped.
  int state_count_cap = 256;

  std::uint64_t seed = 1;
};

enum class TargetMode { kDdqn, kDqnMax };

struct DqnConfig {
  std::vector<int> hidden_layers{128, 128, 128};
  double learning_rate = 1e-4;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-6;
  double discount = 0.5;
  int minibatch = 32;
  int replay_capacity = 10000;
  int target_sync_period = 1000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.1;
  // Fraction of the training horizon over which epsilon decays linearly.
  double epsilon_decay_fraction = 0.5;
  double reward_scale = 1.0;
  TargetMode target_mode = TargetMode::kDdqn;
};

struct ConfigViolation {
  std::string field;
  std::string message;
};

// Every violated invariant; empty means the config is usable.
std::vector<ConfigViolation> validate_config(const SimConfig& cfg);
std::vector<ConfigViolation> validate_config(const DqnConfig& cfg);

// Throws ConfigError listing all violations.
void require_valid(const SimConfig& cfg);

struct GroupAction {
  int n_rach = 1;
  int f_prea = 12;
  int n_repe = 1;

  friend bool operator==(const GroupAction&, const GroupAction&) = default;
};

struct ActionVector {
  std::array<GroupAction, kNumGroups> groups{};

  GroupAction& operator[](int g) { return groups[static_cast<std::size_t>(g)]; }
  const GroupAction& operator[](int g) const { return groups[static_cast<std::size_t>(g)]; }

  static ActionVector uniform(GroupAction ga) { return ActionVector{{ga, ga, ga}}; }

  friend bool operator==(const ActionVector&, const ActionVector&) = default;
};

bool is_valid_action(const ActionVector& a, const SimConfig& cfg);

// Resource elements in one TTI: 48 sub-carriers x (tti_ms / 2 ms slots).
int uplink_re_budget(const SimConfig& cfg);
long rach_re_cost(const ActionVector& a, const SimConfig& cfg);
int data_re_per_device(int group, const ActionVector& a, const SimConfig& cfg);

// Unit conversions at the config boundary.
double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);
double db_to_linear(double db);

// Flat key=value config text with '#' comments. Unknown keys are errors.
struct ExperimentConfig {
  SimConfig sim;
  DqnConfig dqn;
};

ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig load_config_file(const std::string& path);
// Inverse of parse_config_text; values print round-trip exact.
std::string format_config(const ExperimentConfig& cfg);

std::string_view to_string(TargetMode m);
TargetMode parse_target_mode(std::string_view s);

}  // namespace nbiot
