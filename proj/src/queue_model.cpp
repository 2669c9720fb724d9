#include "cellsel/queue_model.hpp"

#include <cmath>
#include <string>

#include "cellsel/error.hpp"

namespace cellsel::queue {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + " must be finite");
}

}  // namespace

double utilization(double lambda, double mu) {
  require_finite(lambda, "lambda");
  require_finite(mu, "mu");
  if (lambda < 0.0) throw DomainError("lambda must be >= 0");
  if (mu <= 0.0) throw DomainError("mu must be > 0");
  const double rho = lambda / mu;
  return rho < kRhoMax ? rho : kRhoMax;
}

double kingman_wait(double rho, double ca2, double cs2, double mu) {
  require_finite(rho, "rho");
  require_finite(ca2, "ca2");
  require_finite(cs2, "cs2");
  require_finite(mu, "mu");
  if (rho < 0.0 || rho >= 1.0) throw DomainError("rho must lie in [0, 1); clamp first");
  if (ca2 < 0.0 || cs2 < 0.0) throw DomainError("squared CVs must be >= 0");
  if (mu <= 0.0) throw DomainError("mu must be > 0");
  return (rho / (1.0 - rho)) * ((ca2 + cs2) / 2.0) * (1.0 / mu);
}

double little_queue_len(double lambda, double w) {
  require_finite(lambda, "lambda");
  require_finite(w, "w");
  if (lambda < 0.0 || w < 0.0) throw DomainError("lambda and w must be >= 0");
  return lambda * w;
}

QueueDescriptors describe(const TrafficStats& s) {
  QueueDescriptors d;
  d.rho = utilization(s.lambda, s.mu);
  d.w = kingman_wait(d.rho, s.ca2, s.cs2, s.mu);
  d.q = little_queue_len(s.lambda, d.w);
  return d;
}

double Moments::variance() const {
  if (n < 2) return 0.0;
  const double nn = static_cast<double>(n);
  const double v = (sumsq - sum * sum / nn) / (nn - 1.0);
  return v > 0.0 ? v : 0.0;
}

double Moments::scv() const {
  const double m = mean();
  if (m <= 0.0) return 0.0;
  return variance() / (m * m);
}

TrafficStats stats_from_moments(std::size_t arrivals, const Moments& gaps, const Moments& services,
                                double window, const EstimatorConfig& cfg) {
  if (!(window > 0.0) || !std::isfinite(window)) throw DomainError("window must be > 0");
  TrafficStats s;
  if (arrivals >= 2) {
    s.lambda = static_cast<double>(arrivals) / window;
  } else {
    s.lambda = 0.0;
  }
  s.ca2 = gaps.n >= 2 ? gaps.scv() : cfg.fallback_c2;
  if (services.n >= 2 && services.mean() > 0.0) {
    s.mu = 1.0 / services.mean();
    s.cs2 = services.scv();
  } else {
    s.mu = cfg.base_mu;
    s.cs2 = cfg.fallback_c2;
  }
  return s;
}

TrafficStats estimate_stats(std::span<const double> arrival_timestamps,
                            std::span<const double> service_durations, double window,
                            const EstimatorConfig& cfg) {
  if (!(window > 0.0) || !std::isfinite(window)) throw DomainError("window must be > 0");
  Moments gaps;
  for (std::size_t k = 0; k < arrival_timestamps.size(); ++k) {
    require_finite(arrival_timestamps[k], "arrival timestamp");
    if (k > 0) {
      const double g = arrival_timestamps[k] - arrival_timestamps[k - 1];
      if (g < 0.0) throw DomainError("arrival timestamps must be non-decreasing");
      gaps.add(g);
    }
  }
  Moments services;
  for (double s : service_durations) {
    require_finite(s, "service duration");
    if (s < 0.0) throw DomainError("service durations must be >= 0");
    services.add(s);
  }
  return stats_from_moments(arrival_timestamps.size(), gaps, services, window, cfg);
}

}  // namespace cellsel::queue
