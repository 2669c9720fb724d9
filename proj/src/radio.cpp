#include "cellsel/radio.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cellsel::radio {

double distance(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double free_space_loss_db(double carrier_hz, double d0_m) {
  return 20.0 * std::log10(4.0 * std::numbers::pi * d0_m * carrier_hz / kSpeedOfLight);
}

PathLossModel PathLossModel::at_carrier(double carrier_hz, double exponent) {
  return PathLossModel{free_space_loss_db(carrier_hz, 1.0), exponent, 1.0};
}

double PathLossModel::loss_db(double distance_m) const {
  const double d = std::max(distance_m, 1.0);
  return pl0_db + 10.0 * exponent * std::log10(d / d0_m);
}

double received_power_dbm(double tx_dbm, const PathLossModel& pl, double distance_m,
                          double shadow_db) {
  return tx_dbm - pl.loss_db(distance_m) - shadow_db;
}

double received_power_dbm(double tx_dbm, const PathLossModel& pl, double distance_m,
                          double sigma_db, std::mt19937_64& rng) {
  std::normal_distribution<double> shadow(0.0, sigma_db);
  return received_power_dbm(tx_dbm, pl, distance_m, shadow(rng));
}

double ue_tx_power_dbm(double total_loss_db, double p0_dbm, double p_max_dbm) {
  return std::min(p_max_dbm, p0_dbm + total_loss_db);
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

}  // namespace cellsel::radio
