#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cellsel/assoc_opt.hpp"
#include "cellsel/indicators.hpp"
#include "cellsel/knowledge_store.hpp"
#include "cellsel/lvq.hpp"
#include "cellsel/policies.hpp"
#include "cellsel/queue_model.hpp"
#include "cellsel/radio.hpp"

namespace cellsel::sim {

struct RadioConfig {
  double carrier_hz = 3.5e9;
  double exponent = 3.5;
  double shadowing_std_db = 8.0;
  bool freeze_shadowing = false;  // draw once per pair instead of every interval
  double sbs_tx_dbm = 30.0;
  double mbs_tx_dbm = 43.0;
  double ue_max_dbm = 23.0;
  double ue_p0_dbm = -70.0;
  double prx_mw = 100.0;
};

struct ServiceConfig {
  // Per-cell throughput, expressed as packets per second at the reference size.
  double base_rate_pps = 2500.0;
  int reference_packet_bytes = 512;
  double fade_min = 0.2;
  double fade_max = 3.0;
  bool fading = true;  // false: fade fixed at 1
  // Per-cell base rate multiplier drawn once, uniform in [1 - spread, 1 + spread].
  double rate_spread = 0.0;
  double c_tilde = 1000.0;
  int stats_window = 10;  // intervals
  // Service-time samples: true records every offered service slot of the
  // interval budget (mu = budget / time); false records only packets served.
  bool slot_service_samples = true;
  // Statistics window behind the greedy baseline's indicators; 1 = last
  // interval only.
  int greedy_window = 1;
  // Per-packet airtime grows with the uplink power-control shortfall.
  bool link_adaptation = false;
  double link_snr_db = 20.0;    // SNR reached when the UE meets its power target
  double link_max_units = 8.0;  // airtime cap in reference packets
};

struct OutputConfig {
  bool wall_clock = false;      // write timing columns instead of NA
  bool sample_log = false;      // keep labeled decision records in the report
  bool track_regret = true;     // shadow solve each hybrid interval for E and R_T
  bool cell_trace = false;      // keep per-(cell, interval) queue descriptors
};

struct ScenarioConfig {
  double area_m = 1000.0;
  int n_cells = 16;
  int n_users = 80;
  double min_separation_m = 40.0;
  double speed_min = 0.5;
  double speed_max = 1.5;
  int packet_bytes = 512;
  double rate_kbps = 200.0;
  int buffer = 1000;
  double decision_interval_s = 1.0;
  double sim_time_s = 600.0;
  double warmup_s = 60.0;
  std::uint64_t seed = 1;
  int capacity = 10;
  int control_delay = 0;

  RadioConfig radio;
  ServiceConfig service;
  IndicatorParams indicators;

  int opt_max_iter = 200;
  double opt_step_a0 = 1.0;

  int bootstrap_intervals = 50;
  int reopt_period = 20;
  double qos_threshold = 0.05;
  int qos_window = 10;
  int prototypes_per_cell = 2;
  double lvq_initial_rate = 0.1;
  double lvq_decay = 0.95;
  int bootstrap_epochs = 30;
  int incremental_epochs = 3;
  double validation_fraction = 0.2;
  int store_window = 100;

  policy::PolicyKind policy;
  double lhr_weight = 0.5;

  OutputConfig output;

  int n_intervals() const;
  int warmup_intervals() const;
  double packets_per_second() const;  // per user and direction
  // Throws ConfigError naming the offending key.
  void validate() const;
  policy::ControllerConfig controller_config() const;
};

struct Topology {
  radio::Vec2 macro;
  std::vector<radio::Vec2> cells;
  std::vector<radio::Vec2> users;
};

// Macro at the centre, small cells uniform with pairwise separation enforced
// by rejection sampling, users uniform. Throws ConfigError when a cell cannot
// be placed within 10^4 attempts.
Topology generate_topology(const ScenarioConfig& cfg, std::mt19937_64& rng);

struct UserState {
  radio::Vec2 pos;
  double heading = 0.0;  // radians
  double speed = 0.0;    // m/s
  int serving = -1;
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t lost = 0;
  std::uint64_t queued = 0;
};

// Folds a coordinate into [0, area]; returns true when an odd number of walls
// was hit (the velocity component flips).
bool reflect(double& coord, double area);

// Draws a fresh speed in [lo, hi] and heading per user, moves for dt and
// reflects at the area boundary.
void step_mobility(std::span<UserState> users, double dt, double speed_lo, double speed_hi,
                   double area, std::mt19937_64& rng);

// Received power with a given shadowing realization, in dBm.
double received_power(const radio::Vec2& user, const radio::Vec2& cell, double tx_dbm,
                      const radio::PathLossModel& pl, double shadow_db);

enum class Direction : std::uint8_t { Uplink = 0, Downlink = 1 };

struct Packet {
  std::uint64_t id = 0;
  int owner = 0;
  Direction dir = Direction::Uplink;
  double created = 0.0;
  double enqueued = 0.0;  // arrival at the current cell's queue
  double units = 1.0;     // airtime in reference packets
};

struct PacketRecord {
  std::uint64_t id = 0;
  int owner = 0;
  int size = 0;
  double created = 0.0;
  std::optional<double> delivered;
  bool dropped = false;
};

// Constant-bit-rate flows, one per user and direction, each with its own
// random phase. Emission k of a flow happens at phase + k * period.
class CbrSource {
 public:
  CbrSource(int n_users, double period_s, std::mt19937_64& rng);

  double period() const { return period_; }
  // Number of emissions of flow f strictly before time t.
  std::int64_t emitted_before(std::size_t flow, double t) const;
  // Packets created in [t0, t1), ordered by creation time.
  std::vector<Packet> generate(double t0, double t1, std::uint64_t& next_id) const;

 private:
  double period_;
  std::vector<double> phase_;  // index 2 * user + direction
};

// Packet-level DropTail FIFO with a per-interval fluid service budget.
class CellQueue {
 public:
  explicit CellQueue(std::size_t buffer) : buffer_(buffer) {}

  struct Delivery {
    Packet packet;
    double completed = 0.0;
  };
  struct Outcome {
    std::vector<Delivery> delivered;
    std::vector<Packet> dropped;
    std::vector<double> service_times;
    std::vector<double> arrival_times;  // accepted and dropped arrivals
    void clear() {
      delivered.clear();
      dropped.clear();
      service_times.clear();
      arrival_times.clear();
    }
  };

  // Serves [t0, t0 + dt) with `budget` reference packets of airtime. Arrivals
  // must be sorted by creation time inside the interval. A packet whose service
  // would end past the interval waits for the next one.
  void serve(double t0, double dt, long budget, std::span<const Packet> arrivals, Outcome& out);

  // Appends migrating packets (already queued elsewhere); overflow is dropped.
  void admit(std::vector<Packet>&& pkts, double now, std::vector<Packet>& dropped);
  // Removes and returns every queued packet owned by `user`, in FIFO order.
  std::vector<Packet> extract_user(int user);

  std::size_t size() const { return queue_.size(); }
  std::size_t buffer() const { return buffer_; }
  const std::deque<Packet>& packets() const { return queue_; }

 private:
  std::size_t buffer_;
  std::deque<Packet> queue_;
};

// Interval budget round(base_rate * fade * dt).
long service_budget(double base_rate_pps, double fade, double dt);
// clamp(Exp(1), lo, hi).
double draw_fade(std::mt19937_64& rng, double lo, double hi);

struct CellIntervalRecord {
  int interval = 0;
  int cell = 0;
  queue::TrafficStats stats;
  queue::QueueDescriptors desc;
};

struct IntervalRecord {
  int interval = 0;
  double mean_latency_s = 0.0;  // deliveries completed in the interval
  double plr = 0.0;             // drops / arrivals in the interval
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  int handovers = 0;
  int disagreements = -1;       // vs shadow solve; -1 when not tracked
  double objective = 0.0;
  double opt_objective = 0.0;
  bool early_trigger = false;
  policy::DecisionSource source = policy::DecisionSource::Optimizer;
};

class LatencyHistogram {
 public:
  static constexpr double kBinSeconds = 1e-4;
  static constexpr std::size_t kBins = 300000;  // 30 s

  void add(double latency_s);
  std::uint64_t count() const { return count_; }
  double mean() const { return count_ ? sum_ / static_cast<double>(count_) : 0.0; }
  // Upper edge of the bin where the cumulative fraction first reaches q.
  double quantile(double q) const;
  // Cumulative fraction at 1 ms bin edges, ending at the first edge covering
  // every sample.
  std::vector<std::pair<double, double>> cdf_ms() const;

 private:
  std::vector<std::uint64_t> bins_ = std::vector<std::uint64_t>(kBins + 1, 0);
  std::uint64_t count_ = 0;
  double sum_ = 0.0;
  double max_ = 0.0;
};

struct MetricsReport {
  std::string policy;
  std::uint64_t seed = 0;
  std::uint64_t generated = 0;  // created after warm-up
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  double mean_latency_s = 0.0;
  double p95_latency_s = 0.0;
  double plr = 0.0;
  std::uint64_t handovers = 0;
  std::optional<double> approx_error;
  std::optional<double> regret_final;
  std::vector<double> regret_trace;  // cumulative, one entry per tracked interval
  std::vector<std::pair<double, double>> latency_cdf;
  std::vector<IntervalRecord> intervals;
  std::vector<CellIntervalRecord> cell_trace;
  std::vector<DecisionRecord> samples;
  double wall_ms_opt = 0.0;
  double wall_ms_lvq = 0.0;
  long solver_iterations = 0;
  int early_triggers = 0;
  int lvq_fallbacks = 0;
  double validation_error = -1.0;
  std::uint64_t conservation_violations = 0;
  std::uint64_t assignment_violations = 0;  // rows without exactly one cell
  std::uint64_t capacity_violations = 0;    // capacity-aware policies only
  std::uint64_t little_violations = 0;
};

// Per-run simulator; step() advances one decision interval.
class Simulation {
 public:
  explicit Simulation(ScenarioConfig cfg);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  bool done() const;
  void step();
  MetricsReport finish();

  int interval() const;  // intervals completed
  const Topology& topology() const;
  const std::vector<UserState>& users() const;
  const std::vector<CellQueue>& queues() const;
  const std::vector<queue::QueueDescriptors>& descriptors() const;
  const ScenarioConfig& config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

MetricsReport run(const ScenarioConfig& cfg);

struct ConfidenceInterval {
  double mean = 0.0;
  double halfwidth = 0.0;
};

// Two-sided 95% Student-t interval. Throws DomainError for fewer than two
// samples.
ConfidenceInterval confidence_interval(std::span<const double> samples);

// t quantile at 0.975 for the given degrees of freedom.
double t_quantile_975(int dof);

}  // namespace cellsel::sim
