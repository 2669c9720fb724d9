#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cellsel/indicators.hpp"
#include "cellsel/matrix.hpp"

namespace cellsel::assoc {

// Per-pair association cost D + P + alpha * E, users x cells.
struct CostMatrix {
  Matrix<double> entries;
  double alpha = 0.0;
};

// Builds the cost matrix from an indicator matrix.
CostMatrix make_costs(const Matrix<IndicatorVector>& ind, double alpha);

struct DualVariables {
  std::vector<double> nu;  // per user, free sign
  std::vector<double> xi;  // per cell, >= 0
};

struct AssociationDecision {
  Assignment x;
  double objective = 0.0;
  DualVariables duals;
  int iterations = 0;
  bool feasible = false;
};

// Step size for subgradient iteration t (1-based).
using StepSchedule = std::function<double(int)>;

// a0 / t: divergent sum, convergent sum of squares.
StepSchedule harmonic_steps(double a0 = 1.0);

struct SolveOptions {
  int max_iter = 200;
  StepSchedule step = harmonic_steps(1.0);
};

// Sum of costs over the set entries of x.
double objective_value(const Assignment& x, const CostMatrix& costs);

// Unconstrained per-user argmin of cost + xi (ties to the lowest cell).
// This is the relaxed subproblem the dual iteration differentiates.
Assignment relaxed_argmin(const CostMatrix& costs, std::span<const double> xi);

// Feasible binary assignment: users in descending regret order (second-best
// minus best adjusted cost, ties by user index), each to the cheapest
// adjusted cell with remaining capacity (ties to the lowest cell index).
// Throws InfeasibleError when total capacity is below the user count.
Assignment primal_projection(const CostMatrix& costs, std::span<const double> xi,
                             std::span<const int> capacities);

// Projected subgradient step on both multiplier sets.
DualVariables dual_update(const DualVariables& duals, const Assignment& x,
                          std::span<const int> capacities, double step);

// Lagrangian relaxation with projected subgradient dual ascent. Returns the
// best feasible projection seen across iterations.
AssociationDecision solve(const CostMatrix& costs, std::span<const int> capacities,
                          const SolveOptions& opts = {});

struct OracleResult {
  Assignment x;
  double objective = 0.0;
};

inline constexpr double kOracleLimit = 1e6;

// Exhaustive enumeration of all capacity-feasible assignments. Ties resolve to
// the lexicographically smallest per-user cell vector. Throws SizeGuardError
// when cells^users exceeds kOracleLimit.
OracleResult brute_force_oracle(const CostMatrix& costs, std::span<const int> capacities);

// True when every row has exactly one set entry and every column respects its
// capacity.
bool satisfies_constraints(const Assignment& x, std::span<const int> capacities);

}  // namespace cellsel::assoc
