#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cellsel/assoc_opt.hpp"
#include "cellsel/error.hpp"
#include "cellsel/knowledge_store.hpp"
#include "cellsel/policies.hpp"

using namespace cellsel;
using namespace cellsel::policy;

TEST(Names, RoundTrip) {
  for (PolicyTag t : {PolicyTag::MaxRsrp, PolicyTag::Lhr, PolicyTag::Gsa, PolicyTag::Proposed})
    EXPECT_EQ(parse_policy(to_string(t)), t);
  EXPECT_EQ(parse_policy("MAX_RSRP"), PolicyTag::MaxRsrp);
  EXPECT_FALSE(parse_policy("random").has_value());
  EXPECT_EQ(ablation_name(*ablation_variant("a3")), "A3");
  EXPECT_EQ(ablation_name(*ablation_variant("full")), "full");
  EXPECT_FALSE(ablation_variant("A9").has_value());
  EXPECT_EQ((PolicyKind{PolicyTag::Proposed, *ablation_variant("A1")}.label()), "proposed/A1");
}

TEST(MaxRsrp, Examples) {
  const std::vector<double> near2{-90, -85, 0, -70};
  EXPECT_EQ(max_rsrp_select(near2), 2);
  const std::vector<double> tied{-80, -80, -80};
  EXPECT_EQ(max_rsrp_select(tied), 0);
  EXPECT_THROW(max_rsrp_select(std::vector<double>{}), DomainError);
}

TEST(MaxRsrp, MatchesArgmaxAndMonotoneTransform) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(-90, 15);
  for (int k = 0; k < 500; ++k) {
    std::vector<double> p(16), t(16);
    for (auto& x : p) x = g(rng);
    int best = 0;
    for (int i = 1; i < 16; ++i)
      if (p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(best)]) best = i;
    for (std::size_t i = 0; i < 16; ++i) t[i] = std::exp(p[i] / 20.0) * 3.0 + 1.0;
    EXPECT_EQ(max_rsrp_select(p), best);
    EXPECT_EQ(max_rsrp_select(t), best);
  }
}

TEST(Lhr, EqualLoadsReduceToMaxRsrp) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(-90, 10);
  const std::vector<int> att(8, 3), caps(8, 10);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> p(8);
    for (auto& x : p) x = g(rng);
    EXPECT_EQ(lhr_select(p, att, caps, 0.5), max_rsrp_select(p));
  }
}

TEST(Lhr, EqualPowersPickLighterCell) {
  const std::vector<double> p{-80, -80};
  const std::vector<int> att{9, 1}, caps{10, 10};
  EXPECT_EQ(lhr_select(p, att, caps, 0.5), 1);
}

TEST(Lhr, HandScoreTable) {
  // rsrp_norm = (0, 1, 0.5); load = (0, 0.8, 0.2)
  // scores at w = 0.6: 0, 0.6 - 0.32 = 0.28, 0.3 - 0.08 = 0.22
  const std::vector<double> p{-100, -80, -90};
  const std::vector<int> att{0, 8, 2}, caps{10, 10, 10};
  EXPECT_EQ(lhr_select(p, att, caps, 0.6), 1);
  // at w = 0.3: 0, 0.3 - 0.56, 0.15 - 0.14
  EXPECT_EQ(lhr_select(p, att, caps, 0.3), 2);
  EXPECT_THROW(lhr_select(p, att, caps, 1.5), DomainError);
  EXPECT_THROW(lhr_select(p, std::vector<int>{0}, caps, 0.5), DomainError);
}

namespace {

assoc::CostMatrix random_costs(std::size_t m, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  assoc::CostMatrix c{Matrix<double>(m, n), 0.3};
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < n; ++i) c.entries(j, i) = u(rng);
  return c;
}

}  // namespace

TEST(Gsa, LooseCapacityIsRowArgmin) {
  std::mt19937_64 rng(3);
  const auto c = random_costs(10, 4, rng);
  const std::vector<int> caps(4, 10);
  const auto x = to_cell_index(gsa_select(c, caps));
  for (std::size_t j = 0; j < 10; ++j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 4; ++i)
      if (c.entries(j, i) < c.entries(j, best)) best = i;
    EXPECT_EQ(x[j], static_cast<int>(best));
  }
}

TEST(Gsa, SingleCell) {
  std::mt19937_64 rng(3);
  const auto c = random_costs(5, 1, rng);
  const std::vector<int> caps{5};
  EXPECT_EQ(to_cell_index(gsa_select(c, caps)), std::vector<int>(5, 0));
  const std::vector<int> small{4};
  EXPECT_THROW(gsa_select(c, small), InfeasibleError);
}

TEST(Gsa, GreedyOrderLosesToSolverOnBindingInstance) {
  std::mt19937_64 rng(5);
  const std::vector<int> caps{2, 2};
  bool found = false;
  for (int k = 0; k < 1000 && !found; ++k) {
    const auto c = random_costs(4, 2, rng);
    const double greedy = assoc::objective_value(gsa_select(c, caps), c);
    const auto oracle = assoc::brute_force_oracle(c, caps);
    if (greedy <= oracle.objective + 1e-9) continue;
    found = true;
    const auto sol = assoc::solve(c, caps);
    EXPECT_NE(to_cell_index(sol.x), to_cell_index(gsa_select(c, caps)));
    EXPECT_LT(sol.objective, greedy);
  }
  EXPECT_TRUE(found);
}

TEST(CompositeQos, Linear) {
  EXPECT_EQ(composite_qos(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(composite_qos(0.4, 0.2) * 2, composite_qos(0.8, 0.4));
}

namespace {

// Pushes latencies alternating 1 and 2 s (loss 0): bounds [1, 2], composites
// alternate 0 and 0.5, so the 10-interval average is 0.25.
QosTracker alternating() {
  QosTracker q(10);
  for (int k = 0; k < 10; ++k) q.push(k % 2 ? 2.0 : 1.0, 0.0);
  return q;
}

}  // namespace

TEST(QosTracker, NeedsFullWindow) {
  QosTracker q(10);
  for (int k = 0; k < 10; ++k) {
    q.push(k % 2 ? 2.0 : 1.0, 0.0);
    EXPECT_FALSE(q.deviation().has_value());
  }
  q.push(1.5, 0.0);
  ASSERT_TRUE(q.deviation().has_value());
  EXPECT_NEAR(*q.deviation(), 0.0, 1e-12);
}

TEST(QosTracker, ThresholdCrossingByHand) {
  // latency 1.52 -> composite 0.26 -> deviation 0.04
  QosTracker a = alternating();
  a.push(1.52, 0.0);
  EXPECT_NEAR(a.moving_average(), 0.25, 1e-12);
  EXPECT_NEAR(*a.deviation(), 0.04, 1e-9);
  // latency 1.53 -> composite 0.265 -> deviation 0.06
  QosTracker b = alternating();
  b.push(1.53, 0.0);
  EXPECT_NEAR(*b.deviation(), 0.06, 1e-9);
}

TEST(QosTracker, ConstantTraceGivesNoDeviation) {
  QosTracker q(10);
  for (int k = 0; k < 30; ++k) q.push(0.02, 0.01);
  EXPECT_FALSE(q.deviation().has_value());
}

TEST(ScheduleDecision, DelaysByConfiguredIntervals) {
  ControllerConfig cfg;
  ControllerState st(cfg);
  EXPECT_FALSE(schedule_decision(st, 1, {1}, 2).has_value());
  EXPECT_FALSE(schedule_decision(st, 2, {2}, 2).has_value());
  EXPECT_EQ(schedule_decision(st, 3, {3}, 2), std::vector<int>{1});
  EXPECT_EQ(schedule_decision(st, 4, {4}, 0), std::vector<int>{4});
}

TEST(KnowledgeStore, SlidingWindow) {
  KnowledgeStore s(3);
  for (int t = 1; t <= 5; ++t) {
    DecisionRecord r;
    r.interval = t;
    r.candidates.assign(2, lvq::FeatureVector{});
    s.add(std::vector<DecisionRecord>{r});
    s.prune(t);
  }
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.records().front().interval, 3);
  EXPECT_EQ(s.samples().size(), 3u);
}

namespace {

// Small controller fixture: 6 users, 3 cells, capacity 3 each, costs and
// features redrawn every interval from a seeded stream.
struct Bench {
  std::size_t m = 6, n = 3;
  std::vector<int> caps{3, 3, 3};
  std::mt19937_64 rng{77};
  assoc::CostMatrix costs;
  Matrix<lvq::FeatureVector> feats;

  void draw() {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    costs = {Matrix<double>(m, n), 0.3};
    feats = Matrix<lvq::FeatureVector>(m, n);
    for (std::size_t i = 0; i < n; ++i) {
      const double occ = u(rng), wi = u(rng);
      for (std::size_t j = 0; j < m; ++j) {
        const double e = 10 * u(rng);
        const double p = occ * occ, d = 0.6 * occ + 0.4 * wi;
        feats(j, i) = {occ, wi, p, d, e};
        costs.entries(j, i) = p + d + 0.3 * e;
      }
    }
  }
  Snapshot snap(int t) { return {t, &costs, &feats, caps}; }
};

ControllerConfig bench_cfg() {
  ControllerConfig c;
  c.n_cells = 3;
  return c;
}

}  // namespace

TEST(HybridStep, BootstrapUsesOptimizerAndEmitsRecords) {
  Bench b;
  const ControllerConfig cfg = bench_cfg();
  ControllerState st(cfg);
  b.draw();
  const StepResult r = hybrid_step(st, b.snap(1), cfg);
  EXPECT_EQ(r.source, DecisionSource::Optimizer);
  ASSERT_EQ(r.records.size(), b.m);
  for (const DecisionRecord& rec : r.records) EXPECT_EQ(rec.candidates.size(), b.n);
  EXPECT_EQ(r.decision, to_cell_index(assoc::solve(b.costs, b.caps).x));
  ASSERT_TRUE(r.enforce.has_value());
  EXPECT_EQ(*r.enforce, r.decision);
}

TEST(HybridStep, ScheduleAndEarlyTrigger) {
  Bench b;
  const ControllerConfig cfg = bench_cfg();
  ControllerState st(cfg);
  for (int t = 1; t <= 50; ++t) {
    b.draw();
    const StepResult r = hybrid_step(st, b.snap(t), cfg);
    EXPECT_EQ(r.source, DecisionSource::Optimizer);
    EXPECT_EQ(r.records.size(), b.m);
  }
  EXPECT_EQ(st.phase, Phase::Hybrid);
  ASSERT_TRUE(st.model.has_value());

  // stable QoS: the tracker never reports a deviation
  for (int t = 51; t <= 59; ++t) {
    b.draw();
    const StepResult r = hybrid_step(st, b.snap(t), cfg);
    EXPECT_EQ(r.source, DecisionSource::Lvq) << t;
    EXPECT_TRUE(r.records.empty());
    EXPECT_TRUE(assoc::satisfies_constraints(to_assignment(r.decision, b.n), b.caps));
  }

  // a composite jump of 20% over the moving average at interval 60
  for (int k = 0; k < 10; ++k) st.qos.push(k % 2 ? 2.0 : 1.0, 0.0);
  st.qos.push(1.6, 0.0);
  b.draw();
  const StepResult r = hybrid_step(st, b.snap(60), cfg);
  EXPECT_TRUE(r.early_trigger);
  EXPECT_EQ(r.source, DecisionSource::Optimizer);
  EXPECT_EQ(r.records.size(), b.m);
  EXPECT_EQ(st.intervals_since_reopt, 0);
}

TEST(HybridStep, JustBelowThresholdDoesNotTrigger) {
  Bench b;
  const ControllerConfig cfg = bench_cfg();
  ControllerState st(cfg);
  for (int t = 1; t <= 59; ++t) {
    b.draw();
    hybrid_step(st, b.snap(t), cfg);
  }
  for (int k = 0; k < 10; ++k) st.qos.push(k % 2 ? 2.0 : 1.0, 0.0);
  st.qos.push(1.52, 0.0);
  b.draw();
  EXPECT_EQ(hybrid_step(st, b.snap(60), cfg).source, DecisionSource::Lvq);
  st.qos.push(1.0, 0.0);
  for (int k = 0; k < 9; ++k) st.qos.push(k % 2 ? 1.0 : 2.0, 0.0);
  st.qos.push(1.53, 0.0);
  b.draw();
  EXPECT_TRUE(hybrid_step(st, b.snap(61), cfg).early_trigger);
}

TEST(HybridStep, ReoptIntervalsMatchSolver) {
  Bench b;
  const ControllerConfig cfg = bench_cfg();
  ControllerState st(cfg);
  int reopts = 0;
  for (int t = 1; t <= 130; ++t) {
    b.draw();
    const StepResult r = hybrid_step(st, b.snap(t), cfg);
    if (t > 50 && r.source == DecisionSource::Optimizer) {
      ++reopts;
      EXPECT_EQ(r.decision, to_cell_index(assoc::solve(b.costs, b.caps).x));
    }
  }
  EXPECT_EQ(reopts, 4);  // every 20 intervals after bootstrap
}

TEST(HybridStep, DisableLvqIsSolverEveryInterval) {
  Bench b;
  ControllerConfig cfg = bench_cfg();
  cfg.ablation.disable_lvq = true;
  ControllerState st(cfg);
  for (int t = 1; t <= 120; ++t) {
    b.draw();
    const StepResult r = hybrid_step(st, b.snap(t), cfg);
    EXPECT_EQ(r.source, DecisionSource::Optimizer);
    EXPECT_EQ(r.decision, to_cell_index(assoc::solve(b.costs, b.caps).x));
  }
}

TEST(HybridStep, GreedyLabelsUnderA2) {
  Bench b;
  ControllerConfig cfg = bench_cfg();
  cfg.ablation.disable_opt_labels = true;
  ControllerState st(cfg);
  b.draw();
  const StepResult r = hybrid_step(st, b.snap(1), cfg);
  EXPECT_EQ(r.source, DecisionSource::Greedy);
  EXPECT_EQ(r.decision, to_cell_index(gsa_select(b.costs, b.caps)));
  EXPECT_EQ(r.records.front().source, LabelSource::Gsa);
}

TEST(HybridStep, ControlDelayHoldsDecision) {
  Bench b;
  ControllerConfig cfg = bench_cfg();
  cfg.control_delay = 2;
  ControllerState st(cfg);
  std::vector<std::vector<int>> made;
  for (int t = 1; t <= 6; ++t) {
    b.draw();
    const StepResult r = hybrid_step(st, b.snap(t), cfg);
    made.push_back(r.decision);
    if (t <= 2) {
      EXPECT_FALSE(r.enforce.has_value());
    } else {
      ASSERT_TRUE(r.enforce.has_value());
      EXPECT_EQ(*r.enforce, made[static_cast<std::size_t>(t - 3)]);
    }
  }
}

TEST(LvqAssign, FallsBackToCostsWhenClassMissing) {
  lvq::LvqModel model;
  model.n_cells = 2;
  model.prototypes = {{lvq::FeatureVector{}, 0}};
  model.bounds.hi.fill(1.0);
  Matrix<lvq::FeatureVector> f(2, 2);
  assoc::CostMatrix c{Matrix<double>(2, 2), 0.3};
  c.entries(0, 0) = 1.0;  // user 0 prefers cell 1, which has no prototypes
  c.entries(0, 1) = 0.2;
  c.entries(1, 0) = 0.1;
  c.entries(1, 1) = 0.9;
  const std::vector<int> caps{2, 2};
  int fb = 0;
  const auto x = lvq_assign(model, f, c, caps, &fb);
  EXPECT_EQ(fb, 1);
  EXPECT_EQ(x, (std::vector<int>{1, 0}));
}
