#include "cellsel/netsim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "cellsel/error.hpp"

namespace cellsel::sim {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Independent generator per purpose so runs that differ only in policy
// consume identical random streams.
enum class Stream : std::uint32_t { Topology = 1, Mobility, Traffic, Shadowing, Fading };

std::mt19937_64 stream_rng(std::uint64_t seed, Stream s) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s)};
  return std::mt19937_64(seq);
}

void require(bool ok, const char* key, const std::string& msg) {
  if (!ok) throw ConfigError(std::string(key) + ": " + msg, key);
}

}  // namespace

// ---------------------------------------------------------------- config

int ScenarioConfig::n_intervals() const {
  return static_cast<int>(std::llround(sim_time_s / decision_interval_s));
}

int ScenarioConfig::warmup_intervals() const {
  return static_cast<int>(std::llround(warmup_s / decision_interval_s));
}

double ScenarioConfig::packets_per_second() const {
  return rate_kbps * 1000.0 / (8.0 * packet_bytes);
}

void ScenarioConfig::validate() const {
  require(area_m > 0.0, "scenario.area", "must be > 0");
  require(n_cells >= 1, "scenario.n_cells", "must be >= 1");
  require(n_users >= 1, "scenario.n_users", "must be >= 1");
  require(min_separation_m >= 0.0, "scenario.min_separation", "must be >= 0");
  require(speed_min >= 0.0, "scenario.speed_min", "must be >= 0");
  require(speed_max >= speed_min, "scenario.speed_max", "must be >= speed_min");
  require(packet_bytes > 0, "scenario.packet_size", "must be > 0");
  require(rate_kbps >= 0.0, "scenario.rate_kbps", "must be >= 0");
  require(buffer >= 1, "scenario.buffer", "must be >= 1");
  require(decision_interval_s > 0.0, "scenario.decision_interval", "must be > 0");
  require(sim_time_s > 0.0, "scenario.sim_time", "must be > 0");
  require(warmup_s >= 0.0 && warmup_s <= sim_time_s, "scenario.warmup",
          "must lie in [0, sim_time]");
  require(capacity >= 1, "scenario.capacity", "must be >= 1");
  require(static_cast<long long>(n_cells) * capacity >= n_users, "scenario.capacity",
          "n_cells * capacity must be >= n_users");
  require(control_delay >= 0, "scenario.control_delay", "must be >= 0");

  require(radio.carrier_hz > 0.0, "radio.carrier_hz", "must be > 0");
  require(radio.exponent > 0.0, "radio.exponent", "must be > 0");
  require(radio.shadowing_std_db >= 0.0, "radio.shadowing_std", "must be >= 0");
  require(radio.prx_mw >= 0.0, "radio.prx_mw", "must be >= 0");

  require(service.base_rate_pps > 0.0, "service.base_rate_pps", "must be > 0");
  require(service.reference_packet_bytes > 0, "service.reference_packet_bytes", "must be > 0");
  require(service.fade_min > 0.0, "service.fade_min", "must be > 0");
  require(service.fade_max >= service.fade_min, "service.fade_max", "must be >= fade_min");
  require(service.c_tilde > 0.0, "service.c_tilde", "must be > 0");
  require(service.stats_window >= 1, "service.stats_window", "must be >= 1");
  require(service.greedy_window >= 1, "service.greedy_window", "must be >= 1");
  require(service.rate_spread >= 0.0 && service.rate_spread < 1.0, "service.rate_spread",
          "must lie in [0, 1)");
  require(service.link_max_units >= 1.0, "service.link_max_units", "must be >= 1");

  try {
    indicators.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("indicators: ") + e.what(), "indicators");
  }
  require(opt_max_iter >= 1, "optimizer.max_iter", "must be >= 1");
  require(opt_step_a0 > 0.0, "optimizer.step_a0", "must be > 0");

  require(bootstrap_intervals >= 1, "controller.bootstrap_intervals", "must be >= 1");
  require(reopt_period >= 1, "controller.reopt_period", "must be >= 1");
  require(qos_threshold >= 0.0, "controller.qos_threshold", "must be >= 0");
  require(qos_window >= 1, "controller.qos_window", "must be >= 1");
  require(store_window >= 1, "controller.store_window", "must be >= 1");
  require(prototypes_per_cell >= 1, "lvq.prototypes_per_cell", "must be >= 1");
  require(lvq_initial_rate > 0.0 && lvq_initial_rate < 1.0, "lvq.initial_rate",
          "must lie in (0, 1)");
  require(lvq_decay > 0.0 && lvq_decay < 1.0, "lvq.decay", "must lie in (0, 1)");
  require(bootstrap_epochs >= 1, "lvq.bootstrap_epochs", "must be >= 1");
  require(incremental_epochs >= 0, "lvq.incremental_epochs", "must be >= 0");
  require(validation_fraction >= 0.0 && validation_fraction < 1.0, "lvq.validation_fraction",
          "must lie in [0, 1)");
  require(lhr_weight >= 0.0 && lhr_weight <= 1.0, "policy.lhr_weight", "must lie in [0, 1]");
}

policy::ControllerConfig ScenarioConfig::controller_config() const {
  policy::ControllerConfig c;
  c.n_cells = n_cells;
  c.bootstrap_intervals = bootstrap_intervals;
  c.reopt_period = reopt_period;
  c.qos_threshold = qos_threshold;
  c.qos_window = static_cast<std::size_t>(qos_window);
  c.control_delay = control_delay;
  c.solver.max_iter = opt_max_iter;
  c.solver.step = assoc::harmonic_steps(opt_step_a0);
  c.prototypes_per_cell = prototypes_per_cell;
  c.lr = {lvq_initial_rate, lvq_decay};
  c.bootstrap_epochs = bootstrap_epochs;
  c.incremental_epochs = incremental_epochs;
  c.validation_fraction = validation_fraction;
  c.store_window = store_window;
  c.seed = seed;
  c.ablation = policy.ablation;
  return c;
}

// ---------------------------------------------------------------- topology

Topology generate_topology(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coord(0.0, cfg.area_m);
  Topology t;
  t.macro = {cfg.area_m / 2.0, cfg.area_m / 2.0};
  constexpr int kMaxAttempts = 10000;
  for (int c = 0; c < cfg.n_cells; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      const radio::Vec2 p{coord(rng), coord(rng)};
      const bool ok = std::all_of(t.cells.begin(), t.cells.end(), [&](const radio::Vec2& q) {
        return radio::distance(p, q) >= cfg.min_separation_m;
      });
      if (ok) {
        t.cells.push_back(p);
        placed = true;
      }
    }
    if (!placed) {
      throw ConfigError("cannot place small cell " + std::to_string(c) +
                            " with the requested minimum separation",
                        "scenario.min_separation");
    }
  }
  for (int u = 0; u < cfg.n_users; ++u) t.users.push_back({coord(rng), coord(rng)});
  return t;
}

// ---------------------------------------------------------------- mobility

bool reflect(double& coord, double area) {
  if (area <= 0.0) {
    coord = 0.0;
    return false;
  }
  const double k = std::floor(coord / area);
  double c = coord - k * area;
  const bool odd = std::fmod(std::fabs(k), 2.0) == 1.0;
  if (odd) c = area - c;
  coord = std::clamp(c, 0.0, area);
  return odd;
}

void step_mobility(std::span<UserState> users, double dt, double speed_lo, double speed_hi,
                   double area, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> speed(speed_lo, speed_hi);
  std::uniform_real_distribution<double> heading(0.0, 2.0 * std::numbers::pi);
  for (UserState& u : users) {
    u.speed = speed(rng);
    u.heading = heading(rng);
    double x = u.pos.x + u.speed * std::cos(u.heading) * dt;
    double y = u.pos.y + u.speed * std::sin(u.heading) * dt;
    if (reflect(x, area)) u.heading = std::numbers::pi - u.heading;
    if (reflect(y, area)) u.heading = -u.heading;
    u.pos = {x, y};
  }
}

double received_power(const radio::Vec2& user, const radio::Vec2& cell, double tx_dbm,
                      const radio::PathLossModel& pl, double shadow_db) {
  return radio::received_power_dbm(tx_dbm, pl, radio::distance(user, cell), shadow_db);
}

// ---------------------------------------------------------------- traffic

CbrSource::CbrSource(int n_users, double period_s, std::mt19937_64& rng) : period_(period_s) {
  std::uniform_real_distribution<double> phase(0.0, std::isfinite(period_s) ? period_s : 1.0);
  phase_.resize(static_cast<std::size_t>(n_users) * 2);
  for (double& p : phase_) p = phase(rng);
}

std::int64_t CbrSource::emitted_before(std::size_t flow, double t) const {
  if (!std::isfinite(period_)) return 0;
  const double ph = phase_[flow];
  if (t <= ph) return 0;
  return static_cast<std::int64_t>(std::ceil((t - ph) / period_));
}

std::vector<Packet> CbrSource::generate(double t0, double t1, std::uint64_t& next_id) const {
  std::vector<Packet> out;
  for (std::size_t f = 0; f < phase_.size(); ++f) {
    const std::int64_t k0 = emitted_before(f, t0);
    const std::int64_t k1 = emitted_before(f, t1);
    for (std::int64_t k = k0; k < k1; ++k) {
      Packet p;
      p.owner = static_cast<int>(f / 2);
      p.dir = f % 2 == 0 ? Direction::Uplink : Direction::Downlink;
      p.created = phase_[f] + static_cast<double>(k) * period_;
      p.enqueued = p.created;
      out.push_back(p);
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Packet& a, const Packet& b) { return a.created < b.created; });
  for (Packet& p : out) p.id = next_id++;
  return out;
}

// ---------------------------------------------------------------- queues

void CellQueue::serve(double t0, double dt, long budget, std::span<const Packet> arrivals,
                      Outcome& out) {
  const double t1 = t0 + dt;
  const double slack = 1e-9 * dt;
  const double unit_time = budget > 0 ? dt / static_cast<double>(budget) : 0.0;
  std::size_t a = 0;
  double free_at = t0;

  auto arrive = [&](const Packet& p) {
    out.arrival_times.push_back(p.created);
    if (queue_.size() >= buffer_) {
      out.dropped.push_back(p);
    } else {
      queue_.push_back(p);
      queue_.back().enqueued = p.created;
    }
  };

  while (true) {
    if (queue_.empty()) {
      if (a == arrivals.size()) break;
      arrive(arrivals[a++]);
      continue;
    }
    const Packet head = queue_.front();
    const double start = std::max(free_at, head.enqueued);
    const double s = head.units * unit_time;
    const double done = start + s;
    if (budget <= 0 || done > t1 + slack) {
      while (a < arrivals.size()) arrive(arrivals[a++]);
      break;
    }
    while (a < arrivals.size() && arrivals[a].created < done) arrive(arrivals[a++]);
    queue_.pop_front();
    out.delivered.push_back({head, done});
    out.service_times.push_back(s);
    free_at = done;
  }
}

void CellQueue::admit(std::vector<Packet>&& pkts, double now, std::vector<Packet>& dropped) {
  for (Packet& p : pkts) {
    if (queue_.size() >= buffer_) {
      dropped.push_back(p);
    } else {
      p.enqueued = now;
      queue_.push_back(p);
    }
  }
}

std::vector<Packet> CellQueue::extract_user(int user) {
  std::vector<Packet> out;
  std::deque<Packet> keep;
  for (const Packet& p : queue_) {
    if (p.owner == user) out.push_back(p);
    else keep.push_back(p);
  }
  queue_.swap(keep);
  return out;
}

long service_budget(double base_rate_pps, double fade, double dt) {
  return std::lround(base_rate_pps * fade * dt);
}

double draw_fade(std::mt19937_64& rng, double lo, double hi) {
  std::exponential_distribution<double> e(1.0);
  return std::clamp(e(rng), lo, hi);
}

// ---------------------------------------------------------------- histogram

void LatencyHistogram::add(double latency_s) {
  const double v = std::max(latency_s, 0.0);
  const auto bin = static_cast<std::size_t>(v / kBinSeconds);
  ++bins_[std::min(bin, kBins)];
  ++count_;
  sum_ += v;
  max_ = std::max(max_, v);
}

double LatencyHistogram::quantile(double q) const {
  if (count_ == 0) return 0.0;
  const double target = q * static_cast<double>(count_);
  std::uint64_t cum = 0;
  for (std::size_t b = 0; b <= kBins; ++b) {
    cum += bins_[b];
    if (static_cast<double>(cum) >= target) {
      return b == kBins ? max_ : static_cast<double>(b + 1) * kBinSeconds;
    }
  }
  return max_;
}

std::vector<std::pair<double, double>> LatencyHistogram::cdf_ms() const {
  std::vector<std::pair<double, double>> out;
  if (count_ == 0) return out;
  constexpr std::size_t kPerMs = 10;
  const auto last_ms = static_cast<std::size_t>(std::floor(max_ * 1000.0)) + 1;
  std::uint64_t cum = 0;
  std::size_t b = 0;
  for (std::size_t ms = 1; ms <= last_ms; ++ms) {
    const std::size_t end = std::min(ms * kPerMs, kBins + 1);
    for (; b < end; ++b) cum += bins_[b];
    if (ms * kPerMs > kBins) {
      for (; b <= kBins; ++b) cum += bins_[b];
    }
    out.emplace_back(static_cast<double>(ms),
                     static_cast<double>(cum) / static_cast<double>(count_));
    if (cum == count_) break;
  }
  out.back().second = 1.0;
  return out;
}

// ---------------------------------------------------------------- simulation

namespace {

struct StatsBucket {
  std::size_t arrivals = 0;
  queue::Moments gaps;
  queue::Moments services;
};

bool capacity_aware(policy::PolicyTag t) {
  return t == policy::PolicyTag::Gsa || t == policy::PolicyTag::Proposed;
}

}  // namespace

struct Simulation::Impl {
  ScenarioConfig cfg;
  policy::ControllerConfig ctrl_cfg;
  radio::PathLossModel pl;
  std::mt19937_64 rng_mobility, rng_shadow, rng_fade;
  Topology topo;
  std::vector<UserState> users;
  std::vector<CellQueue> queues;
  std::unique_ptr<CbrSource> cbr;
  std::vector<std::deque<StatsBucket>> stats;
  std::vector<double> last_arrival;
  std::vector<queue::QueueDescriptors> desc;
  Matrix<double> shadow;
  std::vector<double> units;  // airtime per packet for each user's current link
  std::vector<int> capacities;
  std::vector<double> rate_scale;  // persistent per-cell base rate multiplier
  policy::ControllerState ctrl;

  int n = 0;  // intervals completed
  std::uint64_t next_id = 0;
  LatencyHistogram hist;
  MetricsReport report;
  double last_latency = 0.0;
  double regret = 0.0;
  std::uint64_t disagreements = 0;
  std::uint64_t tracked_decisions = 0;
  bool shadow_drawn = false;

  explicit Impl(ScenarioConfig c)
      : cfg(std::move(c)),
        ctrl_cfg(cfg.controller_config()),
        pl(radio::PathLossModel::at_carrier(cfg.radio.carrier_hz, cfg.radio.exponent)),
        rng_mobility(stream_rng(cfg.seed, Stream::Mobility)),
        rng_shadow(stream_rng(cfg.seed, Stream::Shadowing)),
        rng_fade(stream_rng(cfg.seed, Stream::Fading)),
        ctrl(ctrl_cfg) {
    cfg.validate();
    auto rng_topo = stream_rng(cfg.seed, Stream::Topology);
    topo = generate_topology(cfg, rng_topo);
    std::uniform_real_distribution<double> spread(1.0 - cfg.service.rate_spread,
                                                  1.0 + cfg.service.rate_spread);
    for (int i = 0; i < cfg.n_cells; ++i) rate_scale.push_back(spread(rng_topo));
    auto rng_traffic = stream_rng(cfg.seed, Stream::Traffic);
    const double pps = cfg.packets_per_second();
    cbr = std::make_unique<CbrSource>(cfg.n_users,
                                      pps > 0.0 ? 1.0 / pps
                                                : std::numeric_limits<double>::infinity(),
                                      rng_traffic);
    const auto nu = static_cast<std::size_t>(cfg.n_users);
    const auto nc = static_cast<std::size_t>(cfg.n_cells);
    users.resize(nu);
    for (std::size_t j = 0; j < nu; ++j) users[j].pos = topo.users[j];
    queues.assign(nc, CellQueue(static_cast<std::size_t>(cfg.buffer)));
    stats.resize(nc);
    last_arrival.assign(nc, -1.0);
    desc.assign(nc, {});
    shadow = Matrix<double>(nu, nc, 0.0);
    units.assign(nu, 1.0);
    capacities.assign(nc, cfg.capacity);
    report.policy = cfg.policy.label();
    report.seed = cfg.seed;
  }

  double dt() const { return cfg.decision_interval_s; }
  double base_pps() const {
    return cfg.service.base_rate_pps * cfg.service.reference_packet_bytes / cfg.packet_bytes;
  }
  bool measuring(int interval) const { return interval > cfg.warmup_intervals(); }

  // Statistics over the most recent `window` intervals of cell i.
  queue::TrafficStats cell_stats(std::size_t i, std::size_t window) const {
    std::size_t arrivals = 0;
    queue::Moments gaps, services;
    const std::size_t used = std::min(window, stats[i].size());
    for (std::size_t k = stats[i].size() - used; k < stats[i].size(); ++k) {
      const StatsBucket& b = stats[i][k];
      arrivals += b.arrivals;
      gaps.merge(b.gaps);
      services.merge(b.services);
    }
    const double span = static_cast<double>(std::max<std::size_t>(used, 1)) * dt();
    return queue::stats_from_moments(arrivals, gaps, services, span,
                                     {base_pps() * rate_scale[i], 1.0});
  }
  queue::TrafficStats cell_stats(std::size_t i) const {
    return cell_stats(i, static_cast<std::size_t>(cfg.service.stats_window));
  }

  double link_units(double loss_db) const {
    if (!cfg.service.link_adaptation) return 1.0;
    const double deficit =
        std::max(0.0, cfg.radio.ue_p0_dbm + loss_db - cfg.radio.ue_max_dbm);
    auto se = [](double snr_db) { return std::log2(1.0 + std::pow(10.0, snr_db / 10.0)); };
    const double ref = se(cfg.service.link_snr_db);
    const double got = se(cfg.service.link_snr_db - deficit);
    return std::min(cfg.service.link_max_units, ref / std::max(got, 1e-9));
  }

  void step() {
    ++n;
    const double t0 = static_cast<double>(n - 1) * dt();
    const double t1 = t0 + dt();
    const auto nu = users.size();
    const auto nc = queues.size();
    const bool measure = measuring(n);
    const policy::PolicyTag tag = cfg.policy.tag;
    const policy::Ablation& abl = cfg.policy.ablation;
    const bool proposed = tag == policy::PolicyTag::Proposed;

    // Mobility and radio.
    step_mobility(users, dt(), cfg.speed_min, cfg.speed_max, cfg.area_m, rng_mobility);
    if (!cfg.radio.freeze_shadowing || !shadow_drawn) {
      std::normal_distribution<double> sh(0.0, cfg.radio.shadowing_std_db);
      for (std::size_t j = 0; j < nu; ++j)
        for (std::size_t i = 0; i < nc; ++i)
          shadow(j, i) = cfg.radio.shadowing_std_db > 0.0 ? sh(rng_shadow) : 0.0;
      shadow_drawn = true;
    }
    Matrix<double> loss(nu, nc), rsrp(nu, nc);
    for (std::size_t j = 0; j < nu; ++j) {
      for (std::size_t i = 0; i < nc; ++i) {
        loss(j, i) = pl.loss_db(radio::distance(users[j].pos, topo.cells[i])) + shadow(j, i);
        rsrp(j, i) = cfg.radio.sbs_tx_dbm - loss(j, i);
      }
    }

    // Queue descriptors from the trailing statistics window.
    for (std::size_t i = 0; i < nc; ++i) {
      const queue::TrafficStats s = cell_stats(i);
      desc[i] = queue::describe(s);
      if (desc[i].q != s.lambda * desc[i].w) ++report.little_violations;
      if (cfg.output.cell_trace) report.cell_trace.push_back({n, static_cast<int>(i), s, desc[i]});
    }

    // Indicators, costs and features.
    std::vector<CellLoad> loads(nc);
    for (std::size_t i = 0; i < nc; ++i) {
      const queue::TrafficStats s = cell_stats(i);
      loads[i].desc = desc[i];
      loads[i].mu = s.mu;
      loads[i].c_tilde = cfg.service.c_tilde;
      if (proposed && abl.disable_queue_awareness) loads[i].desc = {};
    }
    PowerTable power{Matrix<double>(nu, nc), Matrix<double>(nu, nc, cfg.radio.prx_mw)};
    for (std::size_t j = 0; j < nu; ++j)
      for (std::size_t i = 0; i < nc; ++i)
        power.ptx_mw(j, i) = radio::dbm_to_mw(
            radio::ue_tx_power_dbm(loss(j, i), cfg.radio.ue_p0_dbm, cfg.radio.ue_max_dbm));
    Matrix<IndicatorVector> ind = indicator_matrix(loads, power, cfg.indicators);
    double alpha = cfg.indicators.alpha;
    if (proposed && abl.disable_service_indicators) {
      for (std::size_t j = 0; j < nu; ++j)
        for (std::size_t i = 0; i < nc; ++i) ind(j, i).d = ind(j, i).p = 0.0;
    }
    if (proposed && abl.disable_energy) alpha = 0.0;
    const assoc::CostMatrix costs = assoc::make_costs(ind, alpha);

    if (n == 1) {
      for (std::size_t j = 0; j < nu; ++j) users[j].serving = policy::max_rsrp_select(rsrp.row(j));
    }

    // Policy decision.
    std::vector<int> decision;
    std::optional<std::vector<int>> enforce;
    IntervalRecord rec;
    rec.interval = n;
    const auto td = Clock::now();
    switch (tag) {
      case policy::PolicyTag::MaxRsrp:
        decision.resize(nu);
        for (std::size_t j = 0; j < nu; ++j) decision[j] = policy::max_rsrp_select(rsrp.row(j));
        break;
      case policy::PolicyTag::Lhr: {
        std::vector<int> attached(nc, 0);
        for (const UserState& u : users) ++attached[static_cast<std::size_t>(u.serving)];
        decision.resize(nu);
        for (std::size_t j = 0; j < nu; ++j) {
          --attached[static_cast<std::size_t>(users[j].serving)];
          decision[j] = policy::lhr_select(rsrp.row(j), attached, capacities, cfg.lhr_weight);
          ++attached[static_cast<std::size_t>(decision[j])];
        }
        break;
      }
      case policy::PolicyTag::Gsa: {
        std::vector<CellLoad> now(nc);
        for (std::size_t i = 0; i < nc; ++i) {
          const queue::TrafficStats s =
              cell_stats(i, static_cast<std::size_t>(cfg.service.greedy_window));
          now[i] = {queue::describe(s), s.mu, cfg.service.c_tilde};
        }
        const assoc::CostMatrix greedy_costs =
            assoc::make_costs(indicator_matrix(now, power, cfg.indicators), cfg.indicators.alpha);
        decision = to_cell_index(policy::gsa_select(greedy_costs, capacities));
        break;
      }
      case policy::PolicyTag::Proposed:
        break;
    }
    if (proposed) {
      Matrix<lvq::FeatureVector> features(nu, nc);
      for (std::size_t j = 0; j < nu; ++j) {
        for (std::size_t i = 0; i < nc; ++i) {
          const IndicatorVector& v = ind(j, i);
          lvq::FeatureVector f = lvq::build_feature(loads[i].desc.q, loads[i].c_tilde, loads[i].mu,
                                                    loads[i].desc.w, v.p, v.d, v.e);
          if (abl.disable_energy) f[4] = 0.0;
          features(j, i) = f;
        }
      }
      policy::Snapshot snap{n, &costs, &features, capacities};
      policy::StepResult r = policy::hybrid_step(ctrl, snap, ctrl_cfg);
      decision = r.decision;
      enforce = std::move(r.enforce);
      report.wall_ms_opt += r.opt_ms;
      report.wall_ms_lvq += r.lvq_ms;
      report.solver_iterations += r.solver_iterations;
      report.lvq_fallbacks += r.fallbacks;
      rec.source = r.source;
      rec.early_trigger = r.early_trigger;
      if (r.early_trigger) ++report.early_triggers;
      if (cfg.output.sample_log) {
        report.samples.insert(report.samples.end(), std::make_move_iterator(r.records.begin()),
                              std::make_move_iterator(r.records.end()));
      }
      if (cfg.output.track_regret && n > cfg.bootstrap_intervals) {
        const assoc::AssociationDecision ref = assoc::solve(costs, capacities, ctrl_cfg.solver);
        const std::vector<int> ref_cells = to_cell_index(ref.x);
        int diff = 0;
        for (std::size_t j = 0; j < nu; ++j) diff += decision[j] != ref_cells[j];
        rec.disagreements = diff;
        rec.objective = assoc::objective_value(to_assignment(decision, nc), costs);
        rec.opt_objective = ref.objective;
        if (measure) {
          disagreements += static_cast<std::uint64_t>(diff);
          tracked_decisions += nu;
          regret += rec.objective - rec.opt_objective;
          report.regret_trace.push_back(regret);
        }
      }
    } else {
      report.wall_ms_opt += ms_since(td);
      enforce = policy::schedule_decision(ctrl, n, decision, cfg.control_delay);
    }

    // Feasibility bookkeeping on the decision just computed.
    {
      std::vector<int> count(nc, 0);
      for (int c : decision) {
        if (c < 0 || static_cast<std::size_t>(c) >= nc) ++report.assignment_violations;
        else ++count[static_cast<std::size_t>(c)];
      }
      if (decision.size() != nu) ++report.assignment_violations;
      if (capacity_aware(tag)) {
        for (std::size_t i = 0; i < nc; ++i)
          if (count[i] > capacities[i]) ++report.capacity_violations;
      }
    }

    // Handover and queue migration.
    std::vector<Packet> dropped;
    if (enforce) {
      for (std::size_t j = 0; j < nu; ++j) {
        const int to = (*enforce)[j];
        const int from = users[j].serving;
        if (to == from) continue;
        std::vector<Packet> moving = queues[static_cast<std::size_t>(from)].extract_user(static_cast<int>(j));
        users[j].serving = to;
        const double u = link_units(loss(j, static_cast<std::size_t>(to)));
        for (Packet& p : moving) p.units = u;
        queues[static_cast<std::size_t>(to)].admit(std::move(moving), t0, dropped);
        ++rec.handovers;
      }
      if (measure) report.handovers += static_cast<std::uint64_t>(rec.handovers);
    }
    for (std::size_t j = 0; j < nu; ++j)
      units[j] = link_units(loss(j, static_cast<std::size_t>(users[j].serving)));

    // Traffic generation.
    std::vector<std::vector<Packet>> arrivals(nc);
    for (Packet& p : cbr->generate(t0, t1, next_id)) {
      UserState& u = users[static_cast<std::size_t>(p.owner)];
      ++u.generated;
      if (p.created >= cfg.warmup_s) ++report.generated;
      p.units = units[static_cast<std::size_t>(p.owner)];
      arrivals[static_cast<std::size_t>(u.serving)].push_back(p);
    }

    // Service.
    double lat_sum = 0.0;
    std::uint64_t lat_n = 0, arrived = 0;
    CellQueue::Outcome out;
    for (std::size_t i = 0; i < nc; ++i) {
      const double fade = draw_fade(rng_fade, cfg.service.fade_min, cfg.service.fade_max);
      const long budget =
          service_budget(base_pps() * rate_scale[i], cfg.service.fading ? fade : 1.0, dt());
      out.clear();
      queues[i].serve(t0, dt(), budget, arrivals[i], out);

      StatsBucket b;
      b.arrivals = out.arrival_times.size();
      for (double a : out.arrival_times) {
        if (last_arrival[i] >= 0.0) b.gaps.add(a - last_arrival[i]);
        last_arrival[i] = a;
      }
      if (cfg.service.slot_service_samples) {
        // Offered slots, each sized for the mean airtime of the attached users.
        double units_sum = 0.0;
        int attached = 0;
        for (std::size_t j = 0; j < nu; ++j) {
          if (users[j].serving == static_cast<int>(i)) {
            units_sum += units[j];
            ++attached;
          }
        }
        const double mean_units = attached ? units_sum / attached : 1.0;
        const auto slots = static_cast<std::size_t>(
            std::lround(static_cast<double>(budget) / mean_units));
        if (slots > 0) b.services.add(dt() / static_cast<double>(slots), slots);
      } else {
        for (double s : out.service_times) b.services.add(s);
      }
      stats[i].push_back(b);
      while (stats[i].size() > static_cast<std::size_t>(cfg.service.stats_window))
        stats[i].pop_front();
      arrived += out.arrival_times.size();

      for (const CellQueue::Delivery& d : out.delivered) {
        ++users[static_cast<std::size_t>(d.packet.owner)].delivered;
        const double lat = d.completed - d.packet.created;
        lat_sum += lat;
        ++lat_n;
        if (d.packet.created >= cfg.warmup_s) {
          ++report.delivered;
          hist.add(lat);
        }
      }
      dropped.insert(dropped.end(), out.dropped.begin(), out.dropped.end());
    }
    for (const Packet& p : dropped) {
      ++users[static_cast<std::size_t>(p.owner)].lost;
      if (p.created >= cfg.warmup_s) ++report.dropped;
    }

    // Conservation: generated = delivered + lost + queued, per user.
    for (UserState& u : users) u.queued = 0;
    for (const CellQueue& q : queues)
      for (const Packet& p : q.packets()) ++users[static_cast<std::size_t>(p.owner)].queued;
    for (const UserState& u : users)
      if (u.generated != u.delivered + u.lost + u.queued) ++report.conservation_violations;

    rec.delivered = lat_n;
    rec.dropped = dropped.size();
    rec.mean_latency_s = lat_n ? lat_sum / static_cast<double>(lat_n) : last_latency;
    last_latency = rec.mean_latency_s;
    rec.plr = arrived ? static_cast<double>(dropped.size()) / static_cast<double>(arrived) : 0.0;
    ctrl.qos.push(rec.mean_latency_s, rec.plr);
    if (proposed && n == cfg.bootstrap_intervals) report.validation_error = ctrl.validation_error;
    report.intervals.push_back(rec);
  }

  MetricsReport finish() {
    report.mean_latency_s = hist.mean();
    report.p95_latency_s = hist.quantile(0.95);
    report.plr = report.generated
                     ? static_cast<double>(report.dropped) / static_cast<double>(report.generated)
                     : 0.0;
    report.latency_cdf = hist.cdf_ms();
    if (tracked_decisions > 0) {
      report.approx_error =
          static_cast<double>(disagreements) / static_cast<double>(tracked_decisions);
      report.regret_final = regret;
    }
    if (ctrl.validation_error >= 0.0) report.validation_error = ctrl.validation_error;
    return std::move(report);
  }
};

Simulation::Simulation(ScenarioConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}
Simulation::~Simulation() = default;

bool Simulation::done() const { return impl_->n >= impl_->cfg.n_intervals(); }
void Simulation::step() { impl_->step(); }
MetricsReport Simulation::finish() { return impl_->finish(); }
int Simulation::interval() const { return impl_->n; }
const Topology& Simulation::topology() const { return impl_->topo; }
const std::vector<UserState>& Simulation::users() const { return impl_->users; }
const std::vector<CellQueue>& Simulation::queues() const { return impl_->queues; }
const std::vector<queue::QueueDescriptors>& Simulation::descriptors() const { return impl_->desc; }
const ScenarioConfig& Simulation::config() const { return impl_->cfg; }

MetricsReport run(const ScenarioConfig& cfg) {
  Simulation sim(cfg);
  while (!sim.done()) sim.step();
  return sim.finish();
}

// ---------------------------------------------------------------- statistics

double t_quantile_975(int dof) {
  if (dof < 1) throw DomainError("t_quantile_975: degrees of freedom must be >= 1");
  const boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, 0.975);
}

ConfidenceInterval confidence_interval(std::span<const double> samples) {
  if (samples.size() < 2) throw DomainError("confidence_interval: need at least two samples");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return {mean, t_quantile_975(static_cast<int>(samples.size()) - 1) * sd / std::sqrt(n)};
}

}  // namespace cellsel::sim
