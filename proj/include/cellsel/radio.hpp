#pragma once

#include <random>

namespace cellsel::radio {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Vec2& a, const Vec2& b);

inline constexpr double kSpeedOfLight = 299792458.0;

// Free-space path loss at reference distance d0, in dB.
double free_space_loss_db(double carrier_hz, double d0_m = 1.0);

// Log-distance model: PL(d) = PL0 + 10 n log10(d / d0), distance floored at
// 1 m.
struct PathLossModel {
  double pl0_db = 0.0;
  double exponent = 3.5;
  double d0_m = 1.0;

  static PathLossModel at_carrier(double carrier_hz, double exponent);
  double loss_db(double distance_m) const;
};

// tx - PL(d) - shadow.
double received_power_dbm(double tx_dbm, const PathLossModel& pl, double distance_m,
                          double shadow_db);

// Draws the shadowing realization from N(0, sigma).
double received_power_dbm(double tx_dbm, const PathLossModel& pl, double distance_m,
                          double sigma_db, std::mt19937_64& rng);

// Uplink open-loop power control: min(p_max, p0 + path loss).
double ue_tx_power_dbm(double total_loss_db, double p0_dbm, double p_max_dbm);

double dbm_to_mw(double dbm);

}  // namespace cellsel::radio
