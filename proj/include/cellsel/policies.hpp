#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cellsel/assoc_opt.hpp"
#include "cellsel/knowledge_store.hpp"
#include "cellsel/lvq.hpp"

namespace cellsel::policy {

enum class PolicyTag { MaxRsrp, Lhr, Gsa, Proposed };

std::string to_string(PolicyTag tag);
// Accepts "max-rsrp", "lhr", "gsa", "proposed" (case-insensitive, '_' or '-').
std::optional<PolicyTag> parse_policy(std::string_view name);

// One-component-at-a-time ablations of the proposed controller.
struct Ablation {
  bool disable_lvq = false;                 // A1: optimizer every interval
  bool disable_opt_labels = false;          // A2: greedy labels instead of optimizer labels
  bool disable_queue_awareness = false;     // A3: occupancy and waiting intensity zeroed
  bool disable_energy = false;              // A4: no alpha * E term
  bool disable_service_indicators = false;  // A5: D and P zeroed

  bool any() const {
    return disable_lvq || disable_opt_labels || disable_queue_awareness || disable_energy ||
           disable_service_indicators;
  }
  friend bool operator==(const Ablation&, const Ablation&) = default;
};

// "A1".."A5" -> the corresponding single flag; "full" -> none.
std::optional<Ablation> ablation_variant(std::string_view name);
std::string ablation_name(const Ablation& a);

struct PolicyKind {
  PolicyTag tag = PolicyTag::Proposed;
  Ablation ablation;

  std::string label() const;
};

// Strongest received power; ties to the lowest index.
int max_rsrp_select(std::span<const double> rsrp_dbm);

// argmax weight * rsrp_norm - (1 - weight) * load_norm, where rsrp_norm is
// min-max over the candidates and load_norm = attached / capacity clamped to
// [0, 1]. Ties to the lowest index.
int lhr_select(std::span<const double> rsrp_dbm, std::span<const int> attached,
               std::span<const int> capacities, double weight);

// Users in index order, each to its cheapest cell with remaining capacity.
Assignment gsa_select(const assoc::CostMatrix& costs, std::span<const int> capacities);

struct QosWeights {
  double latency = 0.5;
  double plr = 0.5;
};

// Weighted sum of already-normalized latency and loss components.
double composite_qos(double latency_norm, double plr_norm, const QosWeights& w = {});

// Holds per-interval (latency, loss) observations, normalizes them min-max
// over everything seen in the run, and reports the relative deviation of
// the newest composite value from the moving average of the ones before it.
class QosTracker {
 public:
  QosTracker(std::size_t window = 10, QosWeights weights = {});

  void push(double latency_s, double plr);
  // Composite of the newest observation under the current bounds.
  double current() const;
  // Mean composite of the `window` observations preceding the newest one.
  double moving_average() const;
  // (current - moving_average) / moving_average; nullopt until the window is
  // full or when the average is zero.
  std::optional<double> deviation() const;
  std::size_t size() const { return history_.size(); }

 private:
  double composite(double lat, double plr) const;

  std::size_t window_;
  QosWeights weights_;
  std::deque<std::pair<double, double>> history_;
  double lat_lo_ = 0.0, lat_hi_ = 0.0, plr_lo_ = 0.0, plr_hi_ = 0.0;
  bool seen_ = false;
};

struct ControllerConfig {
  int n_cells = 0;
  int bootstrap_intervals = 50;
  int reopt_period = 20;
  double qos_threshold = 0.05;
  std::size_t qos_window = 10;
  QosWeights qos_weights;
  int control_delay = 0;
  assoc::SolveOptions solver;
  int prototypes_per_cell = 2;
  lvq::LearningRateSchedule lr;
  int bootstrap_epochs = 30;
  int incremental_epochs = 3;
  double validation_fraction = 0.2;
  int store_window = 100;
  std::uint64_t seed = 1;
  Ablation ablation;
};

enum class Phase { Bootstrap, Hybrid };

// What the controller sees at one decision interval.
struct Snapshot {
  int interval = 0;                          // 1-based
  const assoc::CostMatrix* costs = nullptr;  // ablation-adjusted
  const Matrix<lvq::FeatureVector>* features = nullptr;  // raw, users x cells
  std::span<const int> capacities;
};

struct PendingDecision {
  int enforce_at = 0;
  std::vector<int> cells;
};

struct ControllerState {
  Phase phase = Phase::Bootstrap;
  int interval_index = 0;
  int intervals_since_reopt = 0;
  QosTracker qos;
  std::deque<PendingDecision> pending_decisions;
  std::optional<lvq::LvqModel> model;
  KnowledgeStore store;
  double validation_error = -1.0;

  explicit ControllerState(const ControllerConfig& cfg)
      : qos(cfg.qos_window, cfg.qos_weights), store(cfg.store_window) {}
};

enum class DecisionSource { Optimizer, Greedy, Lvq };

struct StepResult {
  std::vector<int> decision;                 // computed this interval
  std::optional<std::vector<int>> enforce;   // what to apply now, if anything
  DecisionSource source = DecisionSource::Optimizer;
  bool early_trigger = false;
  std::vector<DecisionRecord> records;       // labeled decisions emitted
  int solver_iterations = 0;
  double opt_ms = 0.0;
  double lvq_ms = 0.0;
  int fallbacks = 0;
};

// Decides via LVQ with a capacity repair: users in descending margin order
// (second-nearest minus nearest class distance), each to its nearest class
// with remaining capacity. Users whose preferred cell has no prototypes take
// the cheapest-cost cell instead; those are counted in `fallbacks`.
std::vector<int> lvq_assign(const lvq::LvqModel& model, const Matrix<lvq::FeatureVector>& features,
                            const assoc::CostMatrix& costs, std::span<const int> capacities,
                            int* fallbacks = nullptr);

// One decision interval of the hybrid optimization/learning controller.
StepResult hybrid_step(ControllerState& state, const Snapshot& snap, const ControllerConfig& cfg);

// Control-delay queue: stores `decision` for enforcement cfg.control_delay
// intervals later and pops whatever is due now.
std::optional<std::vector<int>> schedule_decision(ControllerState& state, int interval,
                                                  std::vector<int> decision, int delay);

}  // namespace cellsel::policy
