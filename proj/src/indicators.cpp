#include "cellsel/indicators.hpp"

#include <cmath>
#include <string>

#include "cellsel/error.hpp"

namespace cellsel {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + " must be finite");
}

void require_capacity(double c_tilde) {
  require_finite(c_tilde, "c_tilde");
  if (c_tilde <= 0.0) throw DomainError("c_tilde must be > 0");
}

}  // namespace

void IndicatorParams::validate() const {
  for (double v : {alpha, beta1, gamma, beta2, delta, eta1, eta2}) {
    require_finite(v, "indicator parameter");
    if (v < 0.0) throw DomainError("indicator parameters must be >= 0");
  }
  if (gamma < 1.0) throw DomainError("gamma must be >= 1");
}

double packet_degradation(double q, double c_tilde, double beta1, double gamma) {
  require_capacity(c_tilde);
  require_finite(q, "q");
  if (q < 0.0) throw DomainError("q must be >= 0");
  return beta1 * std::pow(q / c_tilde, gamma);
}

double energy_cost(double ptx_mw, double prx_mw, double q, double c_tilde, double beta2,
                   double delta) {
  require_capacity(c_tilde);
  require_finite(ptx_mw, "ptx");
  require_finite(prx_mw, "prx");
  if (ptx_mw < 0.0 || prx_mw < 0.0) throw DomainError("powers must be >= 0");
  if (q < 0.0) throw DomainError("q must be >= 0");
  return beta2 * (ptx_mw + prx_mw) * (1.0 + delta * q / c_tilde);
}

double delay_indicator(double q, double c_tilde, double mu, double w, double eta1, double eta2) {
  require_capacity(c_tilde);
  require_finite(mu, "mu");
  if (mu <= 0.0) throw DomainError("mu must be > 0");
  if (q < 0.0 || w < 0.0) throw DomainError("q and w must be >= 0");
  return eta1 * (q / c_tilde) + eta2 * (mu * w);
}

Matrix<IndicatorVector> indicator_matrix(const std::vector<CellLoad>& cells,
                                         const PowerTable& radio, const IndicatorParams& params) {
  const std::size_t n_users = radio.ptx_mw.rows();
  const std::size_t n_cells = cells.size();
  if (radio.ptx_mw.cols() != n_cells || radio.prx_mw.cols() != n_cells ||
      radio.prx_mw.rows() != n_users) {
    throw DomainError("indicator_matrix: power table does not cover all user-cell pairs");
  }
  Matrix<IndicatorVector> out(n_users, n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) {
    const CellLoad& c = cells[i];
    const double occ = c.desc.q / c.c_tilde;
    const double wi = c.mu * c.desc.w;
    const double p = packet_degradation(c.desc.q, c.c_tilde, params.beta1, params.gamma);
    const double d = delay_indicator(c.desc.q, c.c_tilde, c.mu, c.desc.w, params.eta1, params.eta2);
    for (std::size_t j = 0; j < n_users; ++j) {
      IndicatorVector& v = out(j, i);
      v.occ = occ;
      v.wi = wi;
      v.p = p;
      v.d = d;
      v.e = energy_cost(radio.ptx_mw(j, i), radio.prx_mw(j, i), c.desc.q, c.c_tilde, params.beta2,
                        params.delta);
    }
  }
  return out;
}

}  // namespace cellsel
