#include "cellsel/assoc_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cellsel/error.hpp"

namespace cellsel::assoc {

namespace {

void check_shape(const CostMatrix& costs, std::size_t n_cells, const char* where) {
  if (costs.entries.cols() != n_cells) {
    throw DomainError(std::string(where) + ": cost matrix has " +
                      std::to_string(costs.entries.cols()) + " cells, expected " +
                      std::to_string(n_cells));
  }
}

void check_capacity_total(std::size_t n_users, std::span<const int> capacities) {
  long long total = 0;
  for (int c : capacities) {
    if (c < 0) throw DomainError("capacities must be >= 0");
    total += c;
  }
  if (total < static_cast<long long>(n_users)) {
    const auto shortfall = static_cast<std::size_t>(static_cast<long long>(n_users) - total);
    throw InfeasibleError("total cell capacity " + std::to_string(total) + " is below " +
                              std::to_string(n_users) + " users (shortfall " +
                              std::to_string(shortfall) + ")",
                          shortfall);
  }
}

}  // namespace

CostMatrix make_costs(const Matrix<IndicatorVector>& ind, double alpha) {
  CostMatrix c{Matrix<double>(ind.rows(), ind.cols()), alpha};
  for (std::size_t j = 0; j < ind.rows(); ++j) {
    for (std::size_t i = 0; i < ind.cols(); ++i) {
      const IndicatorVector& v = ind(j, i);
      c.entries(j, i) = v.d + v.p + alpha * v.e;
    }
  }
  return c;
}

StepSchedule harmonic_steps(double a0) {
  return [a0](int t) { return a0 / static_cast<double>(t); };
}

double objective_value(const Assignment& x, const CostMatrix& costs) {
  if (x.rows() != costs.entries.rows() || x.cols() != costs.entries.cols()) {
    throw DomainError("objective_value: assignment and cost shapes differ");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < x.rows(); ++j) {
    for (std::size_t i = 0; i < x.cols(); ++i) {
      if (x(j, i)) total += costs.entries(j, i);
    }
  }
  return total;
}

Assignment relaxed_argmin(const CostMatrix& costs, std::span<const double> xi) {
  const std::size_t m = costs.entries.rows();
  const std::size_t n = costs.entries.cols();
  check_shape(costs, xi.size(), "relaxed_argmin");
  Assignment x(m, n, 0);
  for (std::size_t j = 0; j < m; ++j) {
    std::size_t best = 0;
    double best_v = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double v = costs.entries(j, i) + xi[i];
      if (v < best_v) {
        best_v = v;
        best = i;
      }
    }
    if (n > 0) x(j, best) = 1;
  }
  return x;
}

Assignment primal_projection(const CostMatrix& costs, std::span<const double> xi,
                             std::span<const int> capacities) {
  const std::size_t m = costs.entries.rows();
  const std::size_t n = costs.entries.cols();
  check_shape(costs, xi.size(), "primal_projection");
  check_shape(costs, capacities.size(), "primal_projection");
  check_capacity_total(m, capacities);

  std::vector<double> regret(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double best = std::numeric_limits<double>::infinity();
    double second = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double v = costs.entries(j, i) + xi[i];
      if (v < best) {
        second = best;
        best = v;
      } else if (v < second) {
        second = v;
      }
    }
    regret[j] = std::isfinite(second) ? second - best : 0.0;
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return regret[a] > regret[b]; });

  std::vector<int> remaining(capacities.begin(), capacities.end());
  Assignment x(m, n, 0);
  for (std::size_t j : order) {
    std::size_t best = n;
    double best_v = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (remaining[i] <= 0) continue;
      const double v = costs.entries(j, i) + xi[i];
      if (best == n || v < best_v) {
        best_v = v;
        best = i;
      }
    }
    // Total capacity >= m, so some cell always has room.
    x(j, best) = 1;
    --remaining[best];
  }
  return x;
}

DualVariables dual_update(const DualVariables& duals, const Assignment& x,
                          std::span<const int> capacities, double step) {
  DualVariables out = duals;
  for (std::size_t i = 0; i < out.xi.size(); ++i) {
    double load = 0.0;
    for (std::size_t j = 0; j < x.rows(); ++j) load += x(j, i);
    out.xi[i] = std::max(0.0, duals.xi[i] + step * (load - static_cast<double>(capacities[i])));
  }
  for (std::size_t j = 0; j < out.nu.size(); ++j) {
    double assigned = 0.0;
    for (std::size_t i = 0; i < x.cols(); ++i) assigned += x(j, i);
    out.nu[j] = duals.nu[j] + step * (assigned - 1.0);
  }
  return out;
}

bool satisfies_constraints(const Assignment& x, std::span<const int> capacities) {
  if (x.cols() != capacities.size()) return false;
  std::vector<int> load(x.cols(), 0);
  for (std::size_t j = 0; j < x.rows(); ++j) {
    int row = 0;
    for (std::size_t i = 0; i < x.cols(); ++i) {
      if (x(j, i)) {
        ++row;
        ++load[i];
      }
    }
    if (row != 1) return false;
  }
  for (std::size_t i = 0; i < x.cols(); ++i) {
    if (load[i] > capacities[i]) return false;
  }
  return true;
}

AssociationDecision solve(const CostMatrix& costs, std::span<const int> capacities,
                          const SolveOptions& opts) {
  const std::size_t m = costs.entries.rows();
  const std::size_t n = costs.entries.cols();
  check_shape(costs, capacities.size(), "solve");
  check_capacity_total(m, capacities);
  if (opts.max_iter < 1) throw DomainError("max_iter must be >= 1");

  DualVariables duals{std::vector<double>(m, 0.0), std::vector<double>(n, 0.0)};
  AssociationDecision best;
  best.objective = std::numeric_limits<double>::infinity();

  int t = 1;
  for (; t <= opts.max_iter; ++t) {
    Assignment x = primal_projection(costs, duals.xi, capacities);
    const double obj = objective_value(x, costs);
    if (obj < best.objective) {
      best.x = std::move(x);
      best.objective = obj;
      best.duals = duals;
    }
    const Assignment relaxed = relaxed_argmin(costs, duals.xi);
    // A capacity-feasible relaxed solution with complementary slackness is
    // optimal for the original problem; nothing left to improve.
    bool slack_ok = true;
    for (std::size_t i = 0; i < n && slack_ok; ++i) {
      int load = 0;
      for (std::size_t j = 0; j < m; ++j) load += relaxed(j, i);
      if (load > capacities[i]) slack_ok = false;
      if (duals.xi[i] > 0.0 && load != capacities[i]) slack_ok = false;
    }
    if (slack_ok) break;
    duals = dual_update(duals, relaxed, capacities, opts.step(t));
  }
  best.iterations = std::min(t, opts.max_iter);
  best.feasible = satisfies_constraints(best.x, capacities);
  return best;
}

OracleResult brute_force_oracle(const CostMatrix& costs, std::span<const int> capacities) {
  const std::size_t m = costs.entries.rows();
  const std::size_t n = costs.entries.cols();
  check_shape(costs, capacities.size(), "brute_force_oracle");
  if (n == 0 && m > 0) throw InfeasibleError("no cells", m);
  if (std::pow(static_cast<double>(n), static_cast<double>(m)) > kOracleLimit) {
    throw SizeGuardError("brute_force_oracle: " + std::to_string(n) + "^" + std::to_string(m) +
                         " assignments exceeds the enumeration guard");
  }
  check_capacity_total(m, capacities);

  std::vector<int> a(m, 0);
  std::vector<int> best_a;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> load(n, 0);
  // Odometer over a[0..m-1], a[0] most significant, so the first strict
  // improvement found is the lexicographically smallest among ties.
  while (true) {
    std::fill(load.begin(), load.end(), 0);
    bool ok = true;
    double obj = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const auto i = static_cast<std::size_t>(a[j]);
      if (++load[i] > capacities[i]) {
        ok = false;
        break;
      }
      obj += costs.entries(j, i);
    }
    if (ok && obj < best) {
      best = obj;
      best_a = a;
    }
    std::size_t k = m;
    while (k > 0) {
      --k;
      if (++a[k] < static_cast<int>(n)) break;
      a[k] = 0;
      if (k == 0) {
        k = m + 1;
        break;
      }
    }
    if (m == 0 || k == m + 1) break;
  }
  OracleResult r;
  r.x = to_assignment(best_a, n);
  r.objective = m == 0 ? 0.0 : best;
  return r;
}

}  // namespace cellsel::assoc
