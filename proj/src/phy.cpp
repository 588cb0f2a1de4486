#include "nbiot/phy.hpp"

#include <algorithm>
#include <cmath>

namespace nbiot::phy {

std::vector<double> place_devices(int n, double radius_km, RngStream& rng) {
  if (!(radius_km > 0.0)) throw ContractViolation("place_devices: radius must be positive");
  std::vector<double> out(static_cast<std::size_t>(std::max(n, 0)));
  // Inverse CDF of f(u) = 2u/R^2; the (0,1] draw keeps u strictly positive.
  for (auto& u : out) u = radius_km * std::sqrt(rng.uniform_open0());
  return out;
}

double rsrp_dbm(double distance_km, const SimConfig& cfg) {
  return cfg.bcast_power_dbm - 10.0 * cfg.path_loss_exponent * std::log10(distance_km);
}

int assign_ce_group(double distance_km, const SimConfig& cfg) {
  if (!(distance_km > 0.0)) throw ContractViolation("assign_ce_group: distance must be positive");
  const double p = rsrp_dbm(distance_km, cfg);
  if (p > cfg.rsrp_threshold1_dbm) return 0;
  if (p >= cfg.rsrp_threshold2_dbm) return 1;
  return 2;
}

std::pair<double, double> ce_boundaries_km(const SimConfig& cfg) {
  auto invert = [&](double thr) {
    return std::pow(10.0, (cfg.bcast_power_dbm - thr) / (10.0 * cfg.path_loss_exponent));
  };
  return {invert(cfg.rsrp_threshold1_dbm), invert(cfg.rsrp_threshold2_dbm)};
}

double preamble_tx_power_mw(double distance_km, int group, const SimConfig& cfg) {
  const double pmax = dbm_to_mw(cfg.max_tx_power_dbm);
  if (group != 0) return pmax;
  const double inversion = dbm_to_mw(cfg.power_ctrl_target_db) * std::pow(distance_km, cfg.path_loss_exponent);
  return std::min(inversion, pmax);
}

LinkBudget make_link(double distance_km, int group, const SimConfig& cfg) {
  LinkBudget l;
  l.distance_km = distance_km;
  l.tx_power_mw = preamble_tx_power_mw(distance_km, group, cfg);
  l.rx_mean_power_mw =
      l.tx_power_mw * std::pow(distance_km, -cfg.path_loss_exponent) * db_to_linear(cfg.snr_offset_db);
  l.mean_snr = l.rx_mean_power_mw / dbm_to_mw(cfg.noise_power_dbm);
  return l;
}

double detection_probability(double mean_snr, int n_repe, double threshold_linear) {
  if (threshold_linear <= 0.0) return 1.0;
  if (!(mean_snr > 0.0)) return 0.0;
  const double p_sg = std::exp(-threshold_linear / mean_snr);
  const double p_rep = std::pow(p_sg, kSymbolGroups);
  // 1 - (1 - p)^n, stable for small p.
  return -std::expm1(n_repe * std::log1p(-p_rep));
}

double detection_probability(const LinkBudget& link, int n_repe, const SimConfig& cfg) {
  return detection_probability(link.mean_snr, n_repe, db_to_linear(cfg.snr_threshold_db));
}

bool sample_detection(double mean_snr, int n_repe, double threshold_linear, RngStream& rng) {
  if (threshold_linear <= 0.0) return true;
  if (!(mean_snr > 0.0)) return false;
  // SNR = mean_snr * h >= threshold  <=>  h >= threshold / mean_snr.
  const double h_min = threshold_linear / mean_snr;
  for (int j = 0; j < n_repe; ++j) {
    bool all = true;
    for (int k = 0; k < kSymbolGroups; ++k) {
      if (rng.exponential() < h_min) all = false;
    }
    if (all) return true;
  }
  return false;
}

bool sample_detection(const LinkBudget& link, int n_repe, const SimConfig& cfg, RngStream& rng) {
  return sample_detection(link.mean_snr, n_repe, db_to_linear(cfg.snr_threshold_db), rng);
}

}  // namespace nbiot::phy
