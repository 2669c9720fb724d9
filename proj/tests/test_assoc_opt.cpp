#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "cellsel/assoc_opt.hpp"
#include "cellsel/error.hpp"

using namespace cellsel;
using namespace cellsel::assoc;

namespace {

CostMatrix costs_from(std::vector<std::vector<double>> rows) {
  CostMatrix c{Matrix<double>(rows.size(), rows.at(0).size()), 0.3};
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (std::size_t i = 0; i < rows[j].size(); ++i) c.entries(j, i) = rows[j][i];
  return c;
}

CostMatrix random_costs(std::size_t m, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CostMatrix c{Matrix<double>(m, n), 0.3};
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < n; ++i) c.entries(j, i) = u(rng);
  return c;
}

std::vector<int> column_counts(const Assignment& x) {
  std::vector<int> out(x.cols(), 0);
  for (std::size_t j = 0; j < x.rows(); ++j)
    for (std::size_t i = 0; i < x.cols(); ++i) out[i] += x(j, i);
  return out;
}

// Independent oracle: plain recursion over every cell vector.
double enumerate_min(const CostMatrix& c, const std::vector<int>& caps) {
  const std::size_t m = c.entries.rows(), n = c.entries.cols();
  std::vector<int> load(n, 0);
  double best = 1e300;
  auto rec = [&](auto&& self, std::size_t j, double acc) -> void {
    if (j == m) {
      best = std::min(best, acc);
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (load[i] >= caps[i]) continue;
      ++load[i];
      self(self, j + 1, acc + c.entries(j, i));
      --load[i];
    }
  };
  rec(rec, 0, 0.0);
  return best;
}

}  // namespace

TEST(ObjectiveValue, Examples) {
  const auto c = costs_from({{1, 2}, {3, 4}});
  const std::vector<int> diag{0, 1};
  EXPECT_DOUBLE_EQ(objective_value(to_assignment(diag, 2), c), 5.0);
  const auto z = costs_from({{0, 0}, {0, 0}});
  EXPECT_DOUBLE_EQ(objective_value(to_assignment(diag, 2), z), 0.0);
  EXPECT_THROW(objective_value(Assignment(3, 2), c), DomainError);
}

TEST(ObjectiveValue, MatchesDoubleLoop) {
  std::mt19937_64 rng(4);
  const auto c = random_costs(4, 3, rng);
  const std::vector<int> cells{2, 0, 1, 2};
  double sum = 0.0;
  for (std::size_t j = 0; j < 4; ++j) sum += c.entries(j, static_cast<std::size_t>(cells[j]));
  EXPECT_DOUBLE_EQ(objective_value(to_assignment(cells, 3), c), sum);
}

TEST(PrimalProjection, Examples) {
  const auto c = costs_from({{1.0, 2.0}});
  const std::vector<int> caps{1, 1};
  std::vector<double> xi{0, 0};
  EXPECT_EQ(to_cell_index(primal_projection(c, xi, caps))[0], 0);
  xi = {1.5, 0};
  EXPECT_EQ(to_cell_index(primal_projection(c, xi, caps))[0], 1);

  const auto two = costs_from({{1.0}, {1.0}});
  const std::vector<int> one{1};
  const std::vector<double> z{0};
  try {
    primal_projection(two, z, one);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.shortfall(), 1u);
  }
}

TEST(PrimalProjection, HighRegretUserGoesFirst) {
  // user 1 loses far more if denied cell 0, so it keeps it
  const auto c = costs_from({{0.0, 0.1}, {0.0, 5.0}});
  const std::vector<int> caps{1, 1};
  const std::vector<double> xi{0, 0};
  EXPECT_EQ(to_cell_index(primal_projection(c, xi, caps)), (std::vector<int>{1, 0}));
}

TEST(DualUpdate, Examples) {
  DualVariables d{{0.0, 0.0, 0.0}, {0.0, 0.3, 0.05}};
  // cell 0 at capacity, cell 1 two over, cell 2 one under
  const std::vector<int> cells{0, 1, 1};
  const std::vector<int> caps{1, 0, 1};
  const DualVariables out = dual_update(d, to_assignment(cells, 3), caps, 0.1);
  EXPECT_DOUBLE_EQ(out.xi[0], 0.0);
  EXPECT_NEAR(out.xi[1], 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(out.xi[2], 0.0);  // 0.05 - 0.1 clamped
  for (double nu : out.nu) EXPECT_DOUBLE_EQ(nu, 0.0);
}

TEST(DualUpdate, CellAtCapacityUnchanged) {
  DualVariables d{{0.0, 0.0}, {0.7}};
  const std::vector<int> cells{0, 0};
  const std::vector<int> caps{2};
  EXPECT_DOUBLE_EQ(dual_update(d, to_assignment(cells, 1), caps, 0.5).xi[0], 0.7);
}

TEST(Solve, DominantCell) {
  const auto c = costs_from({{0.1, 0.9, 0.8}, {0.2, 0.7, 0.9}, {0.3, 0.5, 0.6}});
  const std::vector<int> caps{3, 3, 3};
  const auto r = solve(c, caps);
  EXPECT_TRUE(r.feasible);
  EXPECT_EQ(to_cell_index(r.x), (std::vector<int>{0, 0, 0}));
  EXPECT_NEAR(r.objective, 0.6, 1e-15);
}

TEST(Solve, ZeroCosts) {
  const CostMatrix c{Matrix<double>(5, 3, 0.0), 0.3};
  const std::vector<int> caps{2, 2, 1};
  const auto r = solve(c, caps);
  EXPECT_TRUE(satisfies_constraints(r.x, caps));
  EXPECT_EQ(r.objective, 0.0);
}

TEST(Solve, SixByThreeWithinOracleGap) {
  std::mt19937_64 rng(2024);
  const std::vector<int> caps{2, 2, 2};
  for (int k = 0; k < 20; ++k) {
    const auto c = random_costs(6, 3, rng);
    const auto r = solve(c, caps);
    const double opt = enumerate_min(c, caps);
    EXPECT_TRUE(satisfies_constraints(r.x, caps));
    EXPECT_GE(r.objective, opt - 1e-12);
    EXPECT_LE(r.objective, 1.05 * opt + 1e-12) << "instance " << k;
  }
}

TEST(Solve, InactiveConstraintsGiveRowArgmin) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 50; ++k) {
    const auto c = random_costs(7, 4, rng);
    const std::vector<int> caps(4, 7);
    const auto r = solve(c, caps);
    for (std::size_t j = 0; j < 7; ++j) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < 4; ++i)
        if (c.entries(j, i) < c.entries(j, best)) best = i;
      EXPECT_EQ(r.x(j, best), 1);
    }
    for (double xi : r.duals.xi) EXPECT_EQ(xi, 0.0);
  }
}

TEST(Solve, Deterministic) {
  std::mt19937_64 rng(8);
  const auto c = random_costs(30, 6, rng);
  const std::vector<int> caps(6, 6);
  const auto a = solve(c, caps), b = solve(c, caps);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_EQ(a.duals.xi, b.duals.xi);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Solve, RaisingColumnNeverAttractsUsers) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  for (int k = 0; k < 200; ++k) {
    auto c = random_costs(8, 4, rng);
    const std::vector<int> caps{3, 3, 2, 2};
    const std::size_t col = pick(rng);
    const int before = column_counts(solve(c, caps).x)[col];
    for (std::size_t j = 0; j < 8; ++j) c.entries(j, col) += 0.3;
    const int after = column_counts(solve(c, caps).x)[col];
    EXPECT_LE(after, before) << "instance " << k << " column " << col;
  }
}

TEST(Solve, PropagatesInfeasibility) {
  const CostMatrix c{Matrix<double>(4, 2, 1.0), 0.3};
  const std::vector<int> caps{1, 2};
  EXPECT_THROW(solve(c, caps), InfeasibleError);
}

TEST(Oracle, Examples) {
  const auto c = costs_from({{1, 2}, {2, 1}});
  const std::vector<int> caps{1, 1};
  const auto r = brute_force_oracle(c, caps);
  EXPECT_EQ(to_cell_index(r.x), (std::vector<int>{0, 1}));
  EXPECT_DOUBLE_EQ(r.objective, 2.0);

  const auto one = costs_from({{0.4, 0.2, 0.9}});
  const std::vector<int> c3{1, 1, 1};
  EXPECT_EQ(to_cell_index(brute_force_oracle(one, c3).x)[0], 1);
}

TEST(Oracle, LooseCapacitiesGiveRowArgmin) {
  std::mt19937_64 rng(12);
  const auto c = random_costs(5, 3, rng);
  const std::vector<int> caps{5, 5, 5};
  const auto r = brute_force_oracle(c, caps);
  for (std::size_t j = 0; j < 5; ++j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i)
      if (c.entries(j, i) < c.entries(j, best)) best = i;
    EXPECT_EQ(r.x(j, best), 1);
  }
}

TEST(Oracle, MatchesIndependentEnumeration) {
  std::mt19937_64 rng(99);
  for (int k = 0; k < 30; ++k) {
    const auto c = random_costs(6, 3, rng);
    const std::vector<int> caps{3, 2, 2};
    EXPECT_NEAR(brute_force_oracle(c, caps).objective, enumerate_min(c, caps), 1e-12);
  }
}

TEST(Oracle, SizeGuard) {
  const CostMatrix c{Matrix<double>(13, 3, 1.0), 0.3};  // 3^13 > 10^6
  const std::vector<int> caps(3, 13);
  EXPECT_THROW(brute_force_oracle(c, caps), SizeGuardError);
}
