#pragma once

#include <cstddef>
#include <span>

namespace cellsel::queue {

// Utilization is clamped below 1 so the waiting-time approximation stays
// finite under overload.
inline constexpr double kRhoMax = 0.99;

struct TrafficStats {
  double lambda = 0.0;  // arrivals per second
  double mu = 1.0;      // effective service rate, packets per second
  double ca2 = 1.0;     // squared CV of inter-arrival times
  double cs2 = 1.0;     // squared CV of service times
};

struct QueueDescriptors {
  double rho = 0.0;  // utilization in [0, kRhoMax]
  double w = 0.0;    // mean waiting time, seconds
  double q = 0.0;    // mean queue length, packets (always lambda * w)
};

// min(lambda / mu, kRhoMax). Throws DomainError on negative or non-finite
// input or mu <= 0.
double utilization(double lambda, double mu);

// G/G/1 Kingman approximation of the mean wait. rho must already be clamped
// into [0, 1).
double kingman_wait(double rho, double ca2, double cs2, double mu);

// Little's law.
double little_queue_len(double lambda, double w);

// Chains utilization -> kingman_wait -> little_queue_len.
QueueDescriptors describe(const TrafficStats& stats);

// First and second moments of a sample stream, enough to recover the mean
// and the unbiased sample variance.
struct Moments {
  std::size_t n = 0;
  double sum = 0.0;
  double sumsq = 0.0;

  void add(double x) {
    ++n;
    sum += x;
    sumsq += x * x;
  }
  // k identical observations of x.
  void add(double x, std::size_t k) {
    const double kk = static_cast<double>(k);
    n += k;
    sum += kk * x;
    sumsq += kk * x * x;
  }
  void merge(const Moments& o) {
    n += o.n;
    sum += o.sum;
    sumsq += o.sumsq;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double variance() const;
  // variance / mean^2; 0 for a constant stream.
  double scv() const;
};

struct EstimatorConfig {
  double base_mu = 2500.0;     // service rate reported with sparse data
  double fallback_c2 = 1.0;    // CV^2 reported with sparse data
};

// Builds TrafficStats from windowed moments. `arrivals` counts packets seen in
// the window, `gaps` the inter-arrival gaps, `services` the per-packet
// service durations. Each stream with fewer than two samples falls back to
// the configured defaults (lambda = 0, mu = base_mu, c^2 = fallback_c2).
TrafficStats stats_from_moments(std::size_t arrivals, const Moments& gaps, const Moments& services,
                                double window, const EstimatorConfig& cfg);

// Sliding-window estimator over raw samples. Timestamps must be
// non-decreasing; every sample passed is treated as lying inside the window.
TrafficStats estimate_stats(std::span<const double> arrival_timestamps,
                            std::span<const double> service_durations, double window,
                            const EstimatorConfig& cfg = {});

}  // namespace cellsel::queue
