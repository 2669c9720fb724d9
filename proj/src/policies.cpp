#include "cellsel/policies.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <limits>
#include <numeric>
#include <random>

#include "cellsel/error.hpp"

namespace cellsel::policy {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string normalize_name(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_') c = '-';
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::string to_string(PolicyTag tag) {
  switch (tag) {
    case PolicyTag::MaxRsrp: return "max-rsrp";
    case PolicyTag::Lhr: return "lhr";
    case PolicyTag::Gsa: return "gsa";
    case PolicyTag::Proposed: return "proposed";
  }
  return "unknown";
}

std::optional<PolicyTag> parse_policy(std::string_view name) {
  const std::string n = normalize_name(name);
  if (n == "max-rsrp" || n == "maxrsrp") return PolicyTag::MaxRsrp;
  if (n == "lhr") return PolicyTag::Lhr;
  if (n == "gsa") return PolicyTag::Gsa;
  if (n == "proposed" || n == "kdn") return PolicyTag::Proposed;
  return std::nullopt;
}

std::optional<Ablation> ablation_variant(std::string_view name) {
  const std::string n = normalize_name(name);
  Ablation a;
  if (n == "full") return a;
  if (n == "a1") a.disable_lvq = true;
  else if (n == "a2") a.disable_opt_labels = true;
  else if (n == "a3") a.disable_queue_awareness = true;
  else if (n == "a4") a.disable_energy = true;
  else if (n == "a5") a.disable_service_indicators = true;
  else return std::nullopt;
  return a;
}

std::string ablation_name(const Ablation& a) {
  std::string out;
  auto add = [&out](const char* s) {
    if (!out.empty()) out += '+';
    out += s;
  };
  if (a.disable_lvq) add("A1");
  if (a.disable_opt_labels) add("A2");
  if (a.disable_queue_awareness) add("A3");
  if (a.disable_energy) add("A4");
  if (a.disable_service_indicators) add("A5");
  return out.empty() ? "full" : out;
}

std::string PolicyKind::label() const {
  std::string s = to_string(tag);
  if (tag == PolicyTag::Proposed && ablation.any()) s += "/" + ablation_name(ablation);
  return s;
}

int max_rsrp_select(std::span<const double> rsrp_dbm) {
  if (rsrp_dbm.empty()) throw DomainError("max_rsrp_select: no cells");
  int best = 0;
  for (std::size_t i = 1; i < rsrp_dbm.size(); ++i) {
    if (rsrp_dbm[i] > rsrp_dbm[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

int lhr_select(std::span<const double> rsrp_dbm, std::span<const int> attached,
               std::span<const int> capacities, double weight) {
  if (rsrp_dbm.empty()) throw DomainError("lhr_select: no cells");
  if (attached.size() != rsrp_dbm.size() || capacities.size() != rsrp_dbm.size()) {
    throw DomainError("lhr_select: size mismatch");
  }
  if (weight < 0.0 || weight > 1.0) throw DomainError("lhr_select: weight must lie in [0, 1]");
  const auto [lo_it, hi_it] = std::minmax_element(rsrp_dbm.begin(), rsrp_dbm.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rsrp_dbm.size(); ++i) {
    const double rsrp_norm = span > 0.0 ? (rsrp_dbm[i] - lo) / span : 0.0;
    const double cap = std::max(capacities[i], 1);
    const double load_norm = std::clamp(static_cast<double>(attached[i]) / cap, 0.0, 1.0);
    const double score = weight * rsrp_norm - (1.0 - weight) * load_norm;
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(i);
    }
  }
  return best;
}

Assignment gsa_select(const assoc::CostMatrix& costs, std::span<const int> capacities) {
  const std::size_t m = costs.entries.rows();
  const std::size_t n = costs.entries.cols();
  if (capacities.size() != n) throw DomainError("gsa_select: capacity vector size mismatch");
  long long total = 0;
  for (int c : capacities) total += std::max(c, 0);
  if (total < static_cast<long long>(m)) {
    const auto shortfall = static_cast<std::size_t>(static_cast<long long>(m) - total);
    throw InfeasibleError("gsa_select: total capacity below user count", shortfall);
  }
  std::vector<int> remaining(capacities.begin(), capacities.end());
  Assignment x(m, n, 0);
  for (std::size_t j = 0; j < m; ++j) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (remaining[i] <= 0) continue;
      if (best == n || costs.entries(j, i) < costs.entries(j, best)) best = i;
    }
    x(j, best) = 1;
    --remaining[best];
  }
  return x;
}

double composite_qos(double latency_norm, double plr_norm, const QosWeights& w) {
  return w.latency * latency_norm + w.plr * plr_norm;
}

QosTracker::QosTracker(std::size_t window, QosWeights weights)
    : window_(window), weights_(weights) {}

void QosTracker::push(double latency_s, double plr) {
  if (!seen_) {
    lat_lo_ = lat_hi_ = latency_s;
    plr_lo_ = plr_hi_ = plr;
    seen_ = true;
  } else {
    lat_lo_ = std::min(lat_lo_, latency_s);
    lat_hi_ = std::max(lat_hi_, latency_s);
    plr_lo_ = std::min(plr_lo_, plr);
    plr_hi_ = std::max(plr_hi_, plr);
  }
  history_.emplace_back(latency_s, plr);
  while (history_.size() > window_ + 1) history_.pop_front();
}

double QosTracker::composite(double lat, double plr) const {
  const double lat_span = lat_hi_ - lat_lo_;
  const double plr_span = plr_hi_ - plr_lo_;
  const double ln = lat_span > 0.0 ? (lat - lat_lo_) / lat_span : 0.0;
  const double pn = plr_span > 0.0 ? (plr - plr_lo_) / plr_span : 0.0;
  return composite_qos(ln, pn, weights_);
}

double QosTracker::current() const {
  if (history_.empty()) return 0.0;
  return composite(history_.back().first, history_.back().second);
}

double QosTracker::moving_average() const {
  if (history_.size() < 2) return 0.0;
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k + 1 < history_.size(); ++k) {
    s += composite(history_[k].first, history_[k].second);
    ++n;
  }
  return s / static_cast<double>(n);
}

std::optional<double> QosTracker::deviation() const {
  if (history_.size() < window_ + 1) return std::nullopt;
  const double ma = moving_average();
  if (!(ma > 0.0)) return std::nullopt;
  return (current() - ma) / ma;
}

std::vector<int> lvq_assign(const lvq::LvqModel& model, const Matrix<lvq::FeatureVector>& features,
                            const assoc::CostMatrix& costs, std::span<const int> capacities,
                            int* fallbacks) {
  const std::size_t m = features.rows();
  const std::size_t n = features.cols();
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<std::vector<const lvq::Prototype*>> by_class(n);
  for (const lvq::Prototype& p : model.prototypes) {
    if (p.label >= 0 && static_cast<std::size_t>(p.label) < n) {
      by_class[static_cast<std::size_t>(p.label)].push_back(&p);
    }
  }

  Matrix<double> score(m, n, inf);
  std::vector<double> margin(m, 0.0);
  int fb = 0;
  for (std::size_t j = 0; j < m; ++j) {
    std::size_t cheapest = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (costs.entries(j, i) < costs.entries(j, cheapest)) cheapest = i;
    }
    const bool fallback = by_class[cheapest].empty();
    if (fallback) {
      ++fb;
      for (std::size_t i = 0; i < n; ++i) score(j, i) = costs.entries(j, i);
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        if (by_class[i].empty()) continue;
        const lvq::FeatureVector x = lvq::normalize(features(j, i), model.bounds);
        double d = inf;
        for (const lvq::Prototype* p : by_class[i]) d = std::min(d, lvq::distance(x, p->weights));
        score(j, i) = d;
      }
    }
    double best = inf, second = inf;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = score(j, i);
      if (v < best) {
        second = best;
        best = v;
      } else if (v < second) {
        second = v;
      }
    }
    margin[j] = std::isfinite(second) ? second - best : inf;
  }
  if (fallbacks) *fallbacks = fb;

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return margin[a] > margin[b]; });
  std::vector<int> remaining(capacities.begin(), capacities.end());
  std::vector<int> out(m, -1);
  for (std::size_t j : order) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (remaining[i] <= 0) continue;
      if (best == n || score(j, i) < score(j, best)) best = i;
    }
    if (best == n) throw InfeasibleError("lvq_assign: total capacity below user count", 1);
    out[j] = static_cast<int>(best);
    --remaining[best];
  }
  return out;
}

std::optional<std::vector<int>> schedule_decision(ControllerState& state, int interval,
                                                  std::vector<int> decision, int delay) {
  state.pending_decisions.push_back({interval + delay, std::move(decision)});
  // Of everything due, the most recently made decision wins.
  std::optional<std::vector<int>> due;
  auto& q = state.pending_decisions;
  for (auto it = q.begin(); it != q.end();) {
    if (it->enforce_at <= interval) {
      due = std::move(it->cells);
      it = q.erase(it);
    } else {
      ++it;
    }
  }
  return due;
}

namespace {

std::vector<DecisionRecord> make_records(const Snapshot& snap, const std::vector<int>& decision,
                                         LabelSource source) {
  const Matrix<lvq::FeatureVector>& f = *snap.features;
  std::vector<DecisionRecord> out;
  out.reserve(decision.size());
  for (std::size_t j = 0; j < decision.size(); ++j) {
    DecisionRecord r;
    r.interval = snap.interval;
    r.user = static_cast<int>(j);
    r.chosen = decision[j];
    r.source = source;
    r.candidates.assign(f.row(j).begin(), f.row(j).end());
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<lvq::LabeledSample> normalized(std::vector<lvq::LabeledSample> s,
                                           const lvq::NormBounds& b) {
  for (lvq::LabeledSample& x : s) x.features = lvq::normalize(x.features, b);
  return s;
}

// Gives every class present in `samples` but missing from the model its
// prototypes.
void ensure_classes(lvq::LvqModel& model, const std::vector<lvq::LabeledSample>& samples, int k,
                    std::uint64_t seed) {
  std::vector<lvq::LabeledSample> missing;
  for (const lvq::LabeledSample& s : samples) {
    if (!model.has_class(s.label)) missing.push_back(s);
  }
  if (missing.empty()) return;
  const lvq::LvqModel extra = lvq::init_prototypes(missing, model.n_cells, k, seed, model.schedule);
  model.prototypes.insert(model.prototypes.end(), extra.prototypes.begin(), extra.prototypes.end());
}

void train_initial(ControllerState& state, const ControllerConfig& cfg, int interval) {
  std::vector<const DecisionRecord*> recs;
  for (const DecisionRecord& r : state.store.records()) recs.push_back(&r);
  if (recs.empty()) return;
  std::mt19937_64 rng(cfg.seed ^ 0x5eedULL);
  std::shuffle(recs.begin(), recs.end(), rng);
  const auto n_val = static_cast<std::size_t>(cfg.validation_fraction * static_cast<double>(recs.size()));
  const std::size_t n_train = recs.size() - n_val;

  std::vector<lvq::FeatureVector> span_samples;
  std::vector<lvq::LabeledSample> train;
  for (std::size_t k = 0; k < n_train; ++k) {
    train.push_back(recs[k]->sample());
    span_samples.insert(span_samples.end(), recs[k]->candidates.begin(), recs[k]->candidates.end());
  }
  const lvq::NormBounds bounds = lvq::fit_normalizer(span_samples);
  train = normalized(std::move(train), bounds);
  lvq::LvqModel model = lvq::init_prototypes(train, cfg.n_cells, cfg.prototypes_per_cell,
                                             cfg.seed + static_cast<std::uint64_t>(interval), cfg.lr);
  model.bounds = bounds;
  lvq::train(model, train, cfg.bootstrap_epochs, cfg.seed * 31 + 7);

  if (n_val > 0) {
    std::size_t wrong = 0;
    for (std::size_t k = n_train; k < recs.size(); ++k) {
      std::vector<lvq::Candidate> cands;
      for (std::size_t i = 0; i < recs[k]->candidates.size(); ++i) {
        if (!model.has_class(static_cast<int>(i))) continue;
        cands.push_back({static_cast<int>(i), lvq::normalize(recs[k]->candidates[i], bounds)});
      }
      const std::optional<int> pick = lvq::select_cell(model, cands);
      wrong += !pick || *pick != recs[k]->chosen;
    }
    state.validation_error = static_cast<double>(wrong) / static_cast<double>(n_val);
  }
  state.model = std::move(model);
}

void train_incremental(ControllerState& state, const ControllerConfig& cfg, int interval) {
  if (!state.model) {
    train_initial(state, cfg, interval);
    return;
  }
  lvq::LvqModel& model = *state.model;
  std::vector<lvq::LabeledSample> s = normalized(state.store.samples(), model.bounds);
  if (s.empty()) return;
  ensure_classes(model, s, cfg.prototypes_per_cell, cfg.seed + static_cast<std::uint64_t>(interval));
  lvq::train(model, s, cfg.incremental_epochs, cfg.seed * 31 + static_cast<std::uint64_t>(interval));
}

}  // namespace

StepResult hybrid_step(ControllerState& state, const Snapshot& snap, const ControllerConfig& cfg) {
  if (!snap.costs || !snap.features) throw DomainError("hybrid_step: incomplete snapshot");
  StepResult r;
  state.interval_index = snap.interval;

  auto label_decision = [&]() {
    if (cfg.ablation.disable_opt_labels) {
      const auto t0 = Clock::now();
      r.decision = to_cell_index(gsa_select(*snap.costs, snap.capacities));
      r.opt_ms += ms_since(t0);
      r.source = DecisionSource::Greedy;
    } else {
      const auto t0 = Clock::now();
      const assoc::AssociationDecision d = assoc::solve(*snap.costs, snap.capacities, cfg.solver);
      r.opt_ms += ms_since(t0);
      r.decision = to_cell_index(d.x);
      r.solver_iterations = d.iterations;
      r.source = DecisionSource::Optimizer;
    }
    r.records = make_records(snap, r.decision,
                             cfg.ablation.disable_opt_labels ? LabelSource::Gsa : LabelSource::Optimizer);
    state.store.add(r.records);
  };

  if (cfg.ablation.disable_lvq) {
    const auto t0 = Clock::now();
    const assoc::AssociationDecision d = assoc::solve(*snap.costs, snap.capacities, cfg.solver);
    r.opt_ms += ms_since(t0);
    r.decision = to_cell_index(d.x);
    r.solver_iterations = d.iterations;
    r.source = DecisionSource::Optimizer;
  } else if (state.phase == Phase::Bootstrap) {
    label_decision();
    if (snap.interval >= cfg.bootstrap_intervals) {
      const auto t0 = Clock::now();
      train_initial(state, cfg, snap.interval);
      r.lvq_ms += ms_since(t0);
      state.phase = Phase::Hybrid;
      state.intervals_since_reopt = 0;
    }
  } else {
    ++state.intervals_since_reopt;
    const bool periodic = state.intervals_since_reopt >= cfg.reopt_period;
    const std::optional<double> dev = state.qos.deviation();
    const bool triggered = dev && *dev > cfg.qos_threshold;
    if (periodic || triggered || !state.model) {
      label_decision();
      const auto t0 = Clock::now();
      train_incremental(state, cfg, snap.interval);
      r.lvq_ms += ms_since(t0);
      state.intervals_since_reopt = 0;
      r.early_trigger = triggered && !periodic;
    } else {
      const auto t0 = Clock::now();
      r.decision = lvq_assign(*state.model, *snap.features, *snap.costs, snap.capacities, &r.fallbacks);
      r.lvq_ms += ms_since(t0);
      r.source = DecisionSource::Lvq;
    }
  }
  state.store.prune(snap.interval);
  r.enforce = schedule_decision(state, snap.interval, r.decision, cfg.control_delay);
  return r;
}

}  // namespace cellsel::policy
