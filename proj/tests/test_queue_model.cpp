#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "cellsel/error.hpp"
#include "cellsel/queue_model.hpp"

using namespace cellsel;
using namespace cellsel::queue;

TEST(Utilization, PlainRatio) {
  EXPECT_DOUBLE_EQ(utilization(5.0, 10.0), 0.5);
  EXPECT_DOUBLE_EQ(utilization(0.0, 10.0), 0.0);
}

TEST(Utilization, ClampsOverload) {
  // raw ratio 2.0 is above the cap
  EXPECT_DOUBLE_EQ(utilization(20.0, 10.0), 0.99);
  EXPECT_DOUBLE_EQ(utilization(9.95, 10.0), 0.99);
}

TEST(Utilization, RejectsBadInput) {
  EXPECT_THROW(utilization(-1.0, 10.0), DomainError);
  EXPECT_THROW(utilization(1.0, 0.0), DomainError);
  EXPECT_THROW(utilization(std::numeric_limits<double>::quiet_NaN(), 1.0), DomainError);
  EXPECT_THROW(utilization(1.0, std::numeric_limits<double>::infinity()), DomainError);
}

TEST(Utilization, NeverReachesOne) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lam(0.0, 1e6), mu(1e-3, 1e3);
  for (int k = 0; k < 10000; ++k) EXPECT_LT(utilization(lam(rng), mu(rng)), 1.0);
}

TEST(Kingman, ExamplesByHand) {
  EXPECT_NEAR(kingman_wait(0.5, 1.0, 1.0, 10.0), 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(kingman_wait(0.0, 1.0, 1.0, 10.0), 0.0);
  // (0.8 / 0.2) * (2.0 / 2) * (1 / 4)
  EXPECT_NEAR(kingman_wait(0.8, 0.5, 1.5, 4.0), 1.0, 1e-12);
}

TEST(Kingman, ReducesToMM1) {
  for (double mu : {1.0, 10.0}) {
    for (int k = 1; k <= 9; ++k) {
      const double rho = k / 10.0;
      const double expect = rho / (mu * (1.0 - rho));
      EXPECT_NEAR(kingman_wait(rho, 1.0, 1.0, mu), expect, 1e-12 * expect) << rho << " " << mu;
    }
  }
}

TEST(Kingman, MonotoneInLoadAndVariability) {
  double prev = -1.0;
  for (int k = 0; k < 99; ++k) {
    const double w = kingman_wait(k / 100.0, 0.7, 1.3, 5.0);
    EXPECT_GT(w, prev);
    prev = w;
  }
  prev = -1.0;
  for (double c = 0.0; c < 5.0; c += 0.25) {
    const double w = kingman_wait(0.6, c, 0.5, 5.0);
    EXPECT_GT(w, prev);
    prev = w;
  }
}

TEST(Kingman, RejectsBadInput) {
  EXPECT_THROW(kingman_wait(1.0, 1.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(kingman_wait(-0.1, 1.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(kingman_wait(0.5, -1.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(kingman_wait(0.5, 1.0, 1.0, 0.0), DomainError);
}

TEST(Little, Products) {
  EXPECT_DOUBLE_EQ(little_queue_len(5.0, 0.1), 0.5);
  EXPECT_DOUBLE_EQ(little_queue_len(0.0, 7.3), 0.0);
  // wait taken from the (0.8, 0.5, 1.5, 4) kingman case
  EXPECT_DOUBLE_EQ(little_queue_len(4.0, kingman_wait(0.8, 0.5, 1.5, 4.0)), 4.0);
}

TEST(Describe, QueueIsLambdaTimesWait) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 50.0), c(0.0, 3.0);
  for (int k = 0; k < 1000; ++k) {
    TrafficStats s{u(rng), u(rng) + 0.1, c(rng), c(rng)};
    const QueueDescriptors d = describe(s);
    EXPECT_EQ(d.q, s.lambda * d.w);
    EXPECT_LE(d.rho, kRhoMax);
  }
}

TEST(EstimateStats, DeterministicService) {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back(0.05 + 0.1 * k);
  const std::vector<double> s(10, 0.05);
  const TrafficStats st = estimate_stats(t, s, 1.0);
  EXPECT_DOUBLE_EQ(st.lambda, 10.0);
  EXPECT_NEAR(st.mu, 20.0, 1e-12);
  EXPECT_NEAR(st.cs2, 0.0, 1e-12);
  EXPECT_NEAR(st.ca2, 0.0, 1e-12);
}

TEST(EstimateStats, EmptyWindowFallsBack) {
  const TrafficStats st = estimate_stats({}, {}, 1.0, EstimatorConfig{2500.0, 1.0});
  EXPECT_EQ(st.lambda, 0.0);
  EXPECT_EQ(st.mu, 2500.0);
  EXPECT_EQ(st.ca2, 1.0);
  EXPECT_EQ(st.cs2, 1.0);
}

TEST(EstimateStats, ExponentialArrivalsHaveUnitScv) {
  std::mt19937_64 rng(11);
  std::exponential_distribution<double> gap(8.0);
  std::vector<double> t;
  double now = 0.0;
  for (int k = 0; k < 100000; ++k) {
    now += gap(rng);
    t.push_back(now);
  }
  const TrafficStats st = estimate_stats(t, {}, now);
  EXPECT_NEAR(st.ca2, 1.0, 0.05);
  EXPECT_NEAR(st.lambda, 8.0, 0.1);
}

TEST(Moments, WeightedAddMatchesRepeatedAdd) {
  Moments a, b;
  for (int k = 0; k < 7; ++k) a.add(0.25);
  a.add(1.5);
  b.add(0.25, 7);
  b.add(1.5);
  EXPECT_EQ(a.n, b.n);
  EXPECT_DOUBLE_EQ(a.mean(), b.mean());
  EXPECT_NEAR(a.variance(), b.variance(), 1e-15);
}
