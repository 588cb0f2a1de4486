#include "nbiot/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace nbiot {
namespace {

void check_set(const std::vector<int>& set, const char* name, std::vector<ConfigViolation>& out) {
  if (set.empty()) {
    out.push_back({name, "empty action set"});
    return;
  }
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set[i] <= 0) out.push_back({name, "non-positive set element"});
    if (i > 0 && set[i] <= set[i - 1]) out.push_back({name, "set not strictly increasing"});
  }
}

void check_positive(long v, const char* name, std::vector<ConfigViolation>& out) {
  if (v <= 0) out.push_back({name, "count must be strictly positive"});
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* first = v.data();
  const char* last = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last) {
    throw ConfigError("bad value for '" + key + "': '" + v + "'");
  }
  return out;
}

std::vector<int> parse_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = trim(item);
    if (t.empty()) continue;
    out.push_back(parse_number<int>(key, t));
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string fmt_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field number_field(T SimConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string& v) { c.sim.*m = parse_number<T>("", v); },
          [m](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return fmt_double(c.sim.*m);
            } else {
              return std::to_string(c.sim.*m);
            }
          }};
}

template <typename T>
Field dqn_field(T DqnConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string& v) { c.dqn.*m = parse_number<T>("", v); },
          [m](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return fmt_double(c.dqn.*m);
            } else {
              return std::to_string(c.dqn.*m);
            }
          }};
}

Field list_field(std::vector<int> SimConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string& v) { c.sim.*m = parse_list("", v); },
          [m](const ExperimentConfig& c) { return fmt_list(c.sim.*m); }};
}

// Ordered so format_config output is stable.
const std::vector<std::pair<std::string, Field>>& field_table() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"cell_radius_km", number_field(&SimConfig::cell_radius_km)},
      {"n_devices", number_field(&SimConfig::n_devices)},
      {"n_tti_per_episode", number_field(&SimConfig::n_tti_per_episode)},
      {"tti_ms", number_field(&SimConfig::tti_ms)},
      {"path_loss_exponent", number_field(&SimConfig::path_loss_exponent)},
      {"noise_power_dbm", number_field(&SimConfig::noise_power_dbm)},
      {"snr_threshold_db", number_field(&SimConfig::snr_threshold_db)},
      {"power_ctrl_target_db", number_field(&SimConfig::power_ctrl_target_db)},
      {"bcast_power_dbm", number_field(&SimConfig::bcast_power_dbm)},
      {"max_tx_power_dbm", number_field(&SimConfig::max_tx_power_dbm)},
      {"rsrp_threshold1_dbm", number_field(&SimConfig::rsrp_threshold1_dbm)},
      {"rsrp_threshold2_dbm", number_field(&SimConfig::rsrp_threshold2_dbm)},
      {"max_attempts_per_ce", number_field(&SimConfig::max_attempts_per_ce)},
      {"max_attempts", number_field(&SimConfig::max_attempts)},
      {"max_rrc_wait", number_field(&SimConfig::max_rrc_wait)},
      {"b_rach", number_field(&SimConfig::b_rach)},
      {"b_data", number_field(&SimConfig::b_data)},
      {"prea_set", list_field(&SimConfig::prea_set)},
      {"repe_set", list_field(&SimConfig::repe_set)},
      {"rach_set", list_field(&SimConfig::rach_set)},
      {"beta_a", number_field(&SimConfig::beta_a)},
      {"beta_b", number_field(&SimConfig::beta_b)},
      {"snr_offset_db", number_field(&SimConfig::snr_offset_db)},
      {"backoff_ttis", number_field(&SimConfig::backoff_ttis)},
      {"history_window", number_field(&SimConfig::history_window)},
      {"state_count_cap", number_field(&SimConfig::state_count_cap)},
      {"seed", number_field(&SimConfig::seed)},
      {"dqn_hidden_layers",
       {[](ExperimentConfig& c, const std::string& v) { c.dqn.hidden_layers = parse_list("", v); },
        [](const ExperimentConfig& c) { return fmt_list(c.dqn.hidden_layers); }}},
      {"dqn_learning_rate", dqn_field(&DqnConfig::learning_rate)},
      {"dqn_rms_decay", dqn_field(&DqnConfig::rms_decay)},
      {"dqn_rms_epsilon", dqn_field(&DqnConfig::rms_epsilon)},
      {"dqn_discount", dqn_field(&DqnConfig::discount)},
      {"dqn_minibatch", dqn_field(&DqnConfig::minibatch)},
      {"dqn_replay_capacity", dqn_field(&DqnConfig::replay_capacity)},
      {"dqn_target_sync_period", dqn_field(&DqnConfig::target_sync_period)},
      {"dqn_epsilon_start", dqn_field(&DqnConfig::epsilon_start)},
      {"dqn_epsilon_end", dqn_field(&DqnConfig::epsilon_end)},
      {"dqn_epsilon_decay_fraction", dqn_field(&DqnConfig::epsilon_decay_fraction)},
      {"dqn_reward_scale", dqn_field(&DqnConfig::reward_scale)},
      {"dqn_target_mode",
       {[](ExperimentConfig& c, const std::string& v) { c.dqn.target_mode = parse_target_mode(v); },
        [](const ExperimentConfig& c) { return std::string(to_string(c.dqn.target_mode)); }}},
  };
  return table;
}

}  // namespace

std::vector<ConfigViolation> validate_config(const SimConfig& cfg) {
  std::vector<ConfigViolation> out;
  check_positive(cfg.n_devices, "n_devices", out);
  check_positive(cfg.n_tti_per_episode, "n_tti_per_episode", out);
  check_positive(cfg.tti_ms, "tti_ms", out);
  check_positive(cfg.max_attempts_per_ce, "max_attempts_per_ce", out);
  check_positive(cfg.max_attempts, "max_attempts", out);
  check_positive(cfg.max_rrc_wait, "max_rrc_wait", out);
  check_positive(cfg.b_rach, "b_rach", out);
  check_positive(cfg.b_data, "b_data", out);
  check_positive(cfg.history_window, "history_window", out);
  check_positive(cfg.state_count_cap, "state_count_cap", out);
  if (cfg.backoff_ttis < 0) out.push_back({"backoff_ttis", "must be nonnegative"});
  if (cfg.tti_ms > 0 && cfg.tti_ms % 2 != 0) {
    out.push_back({"tti_ms", "must be a whole number of 2 ms slots"});
  }
  if (!(cfg.cell_radius_km > 0.0)) out.push_back({"cell_radius_km", "must be positive"});
  if (!(cfg.path_loss_exponent > 2.0)) out.push_back({"path_loss_exponent", "must exceed 2"});
  if (!(cfg.rsrp_threshold1_dbm > cfg.rsrp_threshold2_dbm)) {
    out.push_back({"rsrp_thresholds", "threshold order"});
  }
  if (!(cfg.beta_a > 0.0 && cfg.beta_b > 0.0)) out.push_back({"beta", "shape parameters must be positive"});
  check_set(cfg.prea_set, "prea_set", out);
  check_set(cfg.repe_set, "repe_set", out);
  check_set(cfg.rach_set, "rach_set", out);
  if (!cfg.prea_set.empty() && cfg.prea_set.front() < 2) {
    out.push_back({"prea_set", "preamble counts must be at least 2"});
  }
  return out;
}

std::vector<ConfigViolation> validate_config(const DqnConfig& cfg) {
  std::vector<ConfigViolation> out;
  if (cfg.hidden_layers.empty()) out.push_back({"dqn_hidden_layers", "need at least one hidden layer"});
  for (int h : cfg.hidden_layers) {
    if (h <= 0) out.push_back({"dqn_hidden_layers", "layer width must be positive"});
  }
  if (!(cfg.learning_rate > 0.0)) out.push_back({"dqn_learning_rate", "must be positive"});
  if (!(cfg.rms_decay >= 0.0 && cfg.rms_decay < 1.0)) out.push_back({"dqn_rms_decay", "must be in [0,1)"});
  if (!(cfg.rms_epsilon > 0.0)) out.push_back({"dqn_rms_epsilon", "must be positive"});
  if (!(cfg.discount >= 0.0 && cfg.discount < 1.0)) out.push_back({"dqn_discount", "must be in [0,1)"});
  check_positive(cfg.minibatch, "dqn_minibatch", out);
  check_positive(cfg.replay_capacity, "dqn_replay_capacity", out);
  check_positive(cfg.target_sync_period, "dqn_target_sync_period", out);
  if (!(cfg.epsilon_end >= 0.0 && cfg.epsilon_end <= cfg.epsilon_start && cfg.epsilon_start <= 1.0)) {
    out.push_back({"dqn_epsilon", "need 0 <= end <= start <= 1"});
  }
  if (!(cfg.epsilon_decay_fraction > 0.0 && cfg.epsilon_decay_fraction <= 1.0)) {
    out.push_back({"dqn_epsilon_decay_fraction", "must be in (0,1]"});
  }
  if (!(cfg.reward_scale > 0.0)) out.push_back({"dqn_reward_scale", "must be positive"});
  return out;
}

void require_valid(const SimConfig& cfg) {
  auto errs = validate_config(cfg);
  if (errs.empty()) return;
  std::string msg = "invalid config:";
  for (const auto& e : errs) msg += " [" + e.field + ": " + e.message + "]";
  throw ConfigError(msg);
}

bool is_valid_action(const ActionVector& a, const SimConfig& cfg) {
  auto in = [](const std::vector<int>& set, int v) {
    return std::find(set.begin(), set.end(), v) != set.end();
  };
  return std::all_of(a.groups.begin(), a.groups.end(), [&](const GroupAction& g) {
    return in(cfg.rach_set, g.n_rach) && in(cfg.prea_set, g.f_prea) && in(cfg.repe_set, g.n_repe);
  });
}

int uplink_re_budget(const SimConfig& cfg) {
  if (cfg.tti_ms <= 0 || cfg.tti_ms % 2 != 0) {
    throw ConfigError("tti_ms must be a positive multiple of the 2 ms slot");
  }
  constexpr int kSubcarriers = 48;
  return kSubcarriers * (cfg.tti_ms / 2);
}

long rach_re_cost(const ActionVector& a, const SimConfig& cfg) {
  long total = 0;
  for (const auto& g : a.groups) {
    total += static_cast<long>(g.n_rach) * g.n_repe * g.f_prea;
  }
  return cfg.b_rach * total;
}

int data_re_per_device(int group, const ActionVector& a, const SimConfig& cfg) {
  if (group < 0 || group >= kNumGroups) throw ContractViolation("CE group out of range");
  return cfg.b_data * a[group].n_repe;
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

ExperimentConfig parse_config_text(std::string_view text) {
  ExperimentConfig cfg;
  std::map<std::string, const Field*> by_key;
  for (const auto& [k, f] : field_table()) by_key.emplace(k, &f);

  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    }
    auto key = trim(std::string_view(t).substr(0, eq));
    auto val = trim(std::string_view(t).substr(eq + 1));
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    try {
      it->second->set(cfg, val);
    } catch (const ConfigError&) {
      throw ConfigError("line " + std::to_string(lineno) + ": bad value for '" + key + "': '" + val + "'");
    }
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::string format_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [k, f] : field_table()) out += k + " = " + f.get(cfg) + "\n";
  return out;
}

std::string_view to_string(TargetMode m) { return m == TargetMode::kDdqn ? "ddqn" : "dqn-max"; }

TargetMode parse_target_mode(std::string_view s) {
  if (s == "ddqn") return TargetMode::kDdqn;
  if (s == "dqn-max") return TargetMode::kDqnMax;
  throw ConfigError("unknown target mode '" + std::string(s) + "'");
}

}  // namespace nbiot
