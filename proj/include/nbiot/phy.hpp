#pragma once

#include <vector>

#include "nbiot/config.hpp"
#include "nbiot/rng.hpp"

namespace nbiot::phy {

// Mean link quality of one device's preamble transmission. Powers in mW.
struct LinkBudget {
  double distance_km = 1.0;
  double tx_power_mw = 0.0;
  double rx_mean_power_mw = 0.0;
  double mean_snr = 0.0;  // linear
};

// Radial distances of n devices uniform on a disk of the given radius.
std::vector<double> place_devices(int n, double radius_km, RngStream& rng);

// Broadcast power averaged over fading: P_NPBCH * u^-eta, in dBm.
double rsrp_dbm(double distance_km, const SimConfig& cfg);

int assign_ce_group(double distance_km, const SimConfig& cfg);

// Distances where RSRP equals each threshold (group 0/1 and 1/2 edges).
std::pair<double, double> ce_boundaries_km(const SimConfig& cfg);

double preamble_tx_power_mw(double distance_km, int group, const SimConfig& cfg);

LinkBudget make_link(double distance_km, int group, const SimConfig& cfg);

// Closed form of P(at least one repetition has all four symbol groups
// above threshold) under i.i.d. unit-mean exponential fading.
double detection_probability(double mean_snr, int n_repe, double threshold_linear);
double detection_probability(const LinkBudget& link, int n_repe, const SimConfig& cfg);

// One fading realisation of the same event.
bool sample_detection(double mean_snr, int n_repe, double threshold_linear, RngStream& rng);
bool sample_detection(const LinkBudget& link, int n_repe, const SimConfig& cfg, RngStream& rng);

inline constexpr int kSymbolGroups = 4;

}  // namespace nbiot::phy
