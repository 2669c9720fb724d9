#include "cellsel/lvq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "cellsel/error.hpp"

namespace cellsel::lvq {

double LearningRateSchedule::rate(int epoch) const {
  return initial * std::pow(decay, static_cast<double>(epoch));
}

bool LvqModel::has_class(int cell) const {
  return std::any_of(prototypes.begin(), prototypes.end(),
                     [cell](const Prototype& p) { return p.label == cell; });
}

FeatureVector build_feature(double q, double c_tilde, double mu, double w, double p, double d,
                            double e) {
  if (!(c_tilde > 0.0)) throw DomainError("build_feature: c_tilde must be > 0");
  FeatureVector v{q / c_tilde, mu * w, p, d, e};
  for (double x : v) {
    if (!std::isfinite(x)) throw DomainError("build_feature: non-finite component");
  }
  return v;
}

NormBounds fit_normalizer(std::span<const FeatureVector> samples) {
  if (samples.empty()) throw DomainError("fit_normalizer: empty sample set");
  NormBounds b;
  b.lo.fill(std::numeric_limits<double>::infinity());
  b.hi.fill(-std::numeric_limits<double>::infinity());
  for (const FeatureVector& v : samples) {
    for (std::size_t k = 0; k < kFeatureDim; ++k) {
      b.lo[k] = std::min(b.lo[k], v[k]);
      b.hi[k] = std::max(b.hi[k], v[k]);
    }
  }
  return b;
}

NormBounds fit_normalizer(std::span<const LabeledSample> samples) {
  std::vector<FeatureVector> v;
  v.reserve(samples.size());
  for (const LabeledSample& s : samples) v.push_back(s.features);
  return fit_normalizer(v);
}

FeatureVector normalize(const FeatureVector& v, const NormBounds& b) {
  FeatureVector out{};
  for (std::size_t k = 0; k < kFeatureDim; ++k) {
    const double span = b.hi[k] - b.lo[k];
    if (!(span > 0.0)) {
      out[k] = 0.5;
      continue;
    }
    out[k] = std::clamp((v[k] - b.lo[k]) / span, 0.0, 1.0);
  }
  return out;
}

double distance(const FeatureVector& a, const FeatureVector& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < kFeatureDim; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

LvqModel init_prototypes(std::span<const LabeledSample> samples, int n_cells, int k_per_class,
                         std::uint64_t seed, LearningRateSchedule schedule) {
  if (samples.empty()) throw DomainError("init_prototypes: no samples");
  if (k_per_class < 1) throw DomainError("init_prototypes: k_per_class must be >= 1");
  LvqModel model;
  model.n_cells = n_cells;
  model.schedule = schedule;
  std::mt19937_64 rng(seed);

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_cells));
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const int c = samples[s].label;
    if (c < 0 || c >= n_cells) throw DomainError("init_prototypes: label out of range");
    by_class[static_cast<std::size_t>(c)].push_back(s);
  }
  for (int c = 0; c < n_cells; ++c) {
    const auto& idx = by_class[static_cast<std::size_t>(c)];
    if (idx.empty()) continue;
    if (idx.size() < static_cast<std::size_t>(k_per_class)) {
      FeatureVector mean{};
      for (std::size_t s : idx) {
        for (std::size_t k = 0; k < kFeatureDim; ++k) mean[k] += samples[s].features[k];
      }
      for (double& x : mean) x /= static_cast<double>(idx.size());
      for (int r = 0; r < k_per_class; ++r) model.prototypes.push_back({mean, c});
      continue;
    }
    std::vector<std::size_t> pick;
    std::sample(idx.begin(), idx.end(), std::back_inserter(pick),
                static_cast<std::size_t>(k_per_class), rng);
    for (std::size_t s : pick) model.prototypes.push_back({samples[s].features, c});
  }
  return model;
}

void train_epoch(LvqModel& model, std::span<const LabeledSample> samples, double lr,
                 std::uint64_t seed) {
  if (model.prototypes.empty()) return;
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  for (std::size_t s : order) {
    const LabeledSample& x = samples[s];
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < model.prototypes.size(); ++p) {
      const double d = distance(x.features, model.prototypes[p].weights);
      if (d < best) {
        best = d;
        nearest = p;
      }
    }
    Prototype& w = model.prototypes[nearest];
    const double sign = w.label == x.label ? 1.0 : -1.0;
    for (std::size_t k = 0; k < kFeatureDim; ++k) {
      w.weights[k] += sign * lr * (x.features[k] - w.weights[k]);
    }
  }
}

void train(LvqModel& model, std::span<const LabeledSample> samples, int epochs,
           std::uint64_t seed) {
  for (int e = 0; e < epochs; ++e) {
    train_epoch(model, samples, model.current_rate(), seed + static_cast<std::uint64_t>(model.epoch));
    ++model.epoch;
  }
}

std::optional<int> select_cell(const LvqModel& model, std::span<const Candidate> candidates) {
  if (candidates.empty()) return std::nullopt;
  int best_cell = -1;
  double best = std::numeric_limits<double>::infinity();
  for (const Candidate& c : candidates) {
    double dmin = std::numeric_limits<double>::infinity();
    bool found = false;
    for (const Prototype& p : model.prototypes) {
      if (p.label != c.cell) continue;
      found = true;
      dmin = std::min(dmin, distance(c.features, p.weights));
    }
    if (!found) return std::nullopt;
    if (dmin < best || (dmin == best && c.cell < best_cell)) {
      best = dmin;
      best_cell = c.cell;
    }
  }
  return best_cell;
}

double approximation_error(std::span<const int> ml, std::span<const int> opt) {
  if (ml.size() != opt.size()) throw DomainError("approximation_error: length mismatch");
  if (ml.empty()) return 0.0;
  std::size_t diff = 0;
  for (std::size_t k = 0; k < ml.size(); ++k) diff += ml[k] != opt[k];
  return static_cast<double>(diff) / static_cast<double>(ml.size());
}

std::vector<double> cumulative_regret(std::span<const double> ml, std::span<const double> opt) {
  if (ml.size() != opt.size()) throw DomainError("cumulative_regret: length mismatch");
  std::vector<double> out(ml.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < ml.size(); ++k) {
    acc += ml[k] - opt[k];
    out[k] = acc;
  }
  return out;
}

}  // namespace cellsel::lvq
