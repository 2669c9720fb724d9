#pragma once

#include <vector>

#include "cellsel/matrix.hpp"
#include "cellsel/queue_model.hpp"

namespace cellsel {

struct IndicatorParams {
  double alpha = 0.3;  // energy weight in the association cost
  double beta1 = 1.0;
  double gamma = 2.0;
  double beta2 = 0.5;
  double delta = 0.5;
  double eta1 = 0.6;
  double eta2 = 0.4;

  // Throws DomainError when a weight is negative or gamma < 1.
  void validate() const;
};

struct IndicatorVector {
  double d = 0.0;    // delay-related indicator
  double p = 0.0;    // packet service degradation indicator
  double e = 0.0;    // energy service cost indicator
  double occ = 0.0;  // Q / C~
  double wi = 0.0;   // mu * W
};

struct CellCapacityDescriptors {
  double c_tilde = 1000.0;  // equivalent service capacity, packets
  int c_assoc = 1;          // maximum simultaneous users
};

// beta1 * (q / c_tilde)^gamma
double packet_degradation(double q, double c_tilde, double beta1, double gamma);

// beta2 * (ptx + prx) * (1 + delta * q / c_tilde); powers in mW.
double energy_cost(double ptx_mw, double prx_mw, double q, double c_tilde, double beta2,
                   double delta);

// eta1 * (q / c_tilde) + eta2 * mu * w
double delay_indicator(double q, double c_tilde, double mu, double w, double eta1, double eta2);

// Everything the indicator layer needs to know about one cell.
struct CellLoad {
  queue::QueueDescriptors desc;
  double mu = 1.0;
  double c_tilde = 1000.0;
};

// Per-pair transmit/receive powers in mW, users x cells.
struct PowerTable {
  Matrix<double> ptx_mw;
  Matrix<double> prx_mw;
};

// Indicators for every (user, cell) pair. Entry (j, i) uses cell i's queue
// state and pair (j, i)'s powers, so P and D are constant down a column.
Matrix<IndicatorVector> indicator_matrix(const std::vector<CellLoad>& cells,
                                         const PowerTable& radio, const IndicatorParams& params);

}  // namespace cellsel
