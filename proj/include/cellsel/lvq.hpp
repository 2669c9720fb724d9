#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cellsel::lvq {

inline constexpr std::size_t kFeatureDim = 5;

// (Q/C~, mu*W, P, D, E) in this fixed order.
using FeatureVector = std::array<double, kFeatureDim>;

struct Prototype {
  FeatureVector weights{};
  int label = 0;
};

struct NormBounds {
  FeatureVector lo{};
  FeatureVector hi{};
};

// Exponential decay: rate(e) = initial * decay^e for epoch e = 0, 1, ...
struct LearningRateSchedule {
  double initial = 0.1;
  double decay = 0.95;

  double rate(int epoch) const;
};

struct LvqModel {
  int n_cells = 0;
  std::vector<Prototype> prototypes;
  NormBounds bounds;
  LearningRateSchedule schedule;
  int epoch = 0;  // epochs completed so far

  double current_rate() const { return schedule.rate(epoch); }
  bool has_class(int cell) const;
};

struct LabeledSample {
  FeatureVector features{};
  int label = 0;
  int interval = 0;
  int user = 0;
};

// Raw (unnormalized) feature vector for one candidate pair.
FeatureVector build_feature(double q, double c_tilde, double mu, double w, double p, double d,
                            double e);

// Per-component min/max over the samples. Throws DomainError on an empty set.
NormBounds fit_normalizer(std::span<const FeatureVector> samples);
NormBounds fit_normalizer(std::span<const LabeledSample> samples);

// (v - lo) / (hi - lo) clamped to [0, 1]; a constant component maps to 0.5.
FeatureVector normalize(const FeatureVector& v, const NormBounds& b);

double distance(const FeatureVector& a, const FeatureVector& b);

// k prototypes per class drawn without replacement from that class's samples
// (seeded). A class with fewer than k samples gets k copies of its mean.
// Samples are expected to be normalized already. Throws DomainError when the
// sample set is empty.
LvqModel init_prototypes(std::span<const LabeledSample> samples, int n_cells, int k_per_class,
                         std::uint64_t seed, LearningRateSchedule schedule = {});

// One pass over the samples in a seeded shuffled order with the given rate:
// the nearest prototype moves toward a same-label sample and away otherwise.
void train_epoch(LvqModel& model, std::span<const LabeledSample> samples, double lr,
                 std::uint64_t seed);

// Runs `epochs` epochs, each at the model's current scheduled rate, advancing
// the epoch counter.
void train(LvqModel& model, std::span<const LabeledSample> samples, int epochs,
           std::uint64_t seed);

struct Candidate {
  int cell = 0;
  FeatureVector features{};  // normalized
};

// argmin over candidates of the distance to the nearest prototype of that
// candidate's cell; ties to the lowest cell index. Returns nullopt when some
// candidate cell has no prototypes (caller falls back).
std::optional<int> select_cell(const LvqModel& model, std::span<const Candidate> candidates);

// Fraction of positions where the two decision sequences differ.
double approximation_error(std::span<const int> ml, std::span<const int> opt);

// Running sum of (ml - opt).
std::vector<double> cumulative_regret(std::span<const double> ml, std::span<const double> opt);

}  // namespace cellsel::lvq
