#include "cellsel/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <numeric>
#include <mutex>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "json.hpp"

namespace cellsel::harness {

std::vector<std::uint64_t> derive_seeds(std::uint64_t master_seed, int n_runs) {
  std::vector<std::uint64_t> out;
  for (int k = 0; k < n_runs; ++k) out.push_back(master_seed + static_cast<std::uint64_t>(k));
  return out;
}

BatchResult run_batch(const sim::ScenarioConfig& base, int n_runs, std::uint64_t master_seed,
                      std::span<const policy::PolicyKind> policies, const Progress& progress,
                      int jobs) {
  if (n_runs < 1) throw std::invalid_argument("run_batch: n_runs must be >= 1");
  BatchResult out;
  out.wall_clock = base.output.wall_clock;
  const std::vector<std::uint64_t> seeds = derive_seeds(master_seed, n_runs);
  std::vector<sim::ScenarioConfig> work;
  for (const policy::PolicyKind& pk : policies) {
    out.policies.push_back(pk.label());
    for (std::uint64_t seed : seeds) {
      sim::ScenarioConfig cfg = base;
      cfg.policy = pk;
      cfg.seed = seed;
      work.push_back(std::move(cfg));
    }
  }

  // Results land in their (policy, seed) slot whatever order workers finish.
  std::vector<std::optional<sim::MetricsReport>> slots(work.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::optional<RunError> failure;
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= work.size()) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      const sim::ScenarioConfig& cfg = work[k];
      try {
        sim::MetricsReport r = sim::run(cfg);
        std::lock_guard lock(mu);
        if (progress) progress(r);
        slots[k] = std::move(r);
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (!failure) {
          failure.emplace(fmt::format("run failed (policy {}, seed {}): {}", cfg.policy.label(),
                                      cfg.seed, e.what()),
                          cfg.policy.label(), cfg.seed);
        }
        return;
      }
    }
  };
  const auto n_workers = static_cast<std::size_t>(std::max(1, jobs));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(n_workers, work.size()); ++w) pool.emplace_back(worker);
  }
  if (failure) throw *failure;
  for (auto& r : slots) out.runs.push_back(std::move(*r));
  return out;
}

namespace {

std::string num(double v) { return fmt::format("{}", v); }

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : "NA"; }

struct Column {
  const char* name;
  std::function<std::optional<double>(const sim::MetricsReport&)> get;
  bool timing = false;
};

const std::vector<Column>& columns() {
  static const std::vector<Column> c = {
      {"mean_latency_ms", [](const sim::MetricsReport& r) -> std::optional<double> { return r.mean_latency_s * 1e3; }},
      {"p95_latency_ms", [](const sim::MetricsReport& r) -> std::optional<double> { return r.p95_latency_s * 1e3; }},
      {"plr", [](const sim::MetricsReport& r) -> std::optional<double> { return r.plr; }},
      {"handovers", [](const sim::MetricsReport& r) -> std::optional<double> { return static_cast<double>(r.handovers); }},
      {"approx_error", [](const sim::MetricsReport& r) { return r.approx_error; }},
      {"regret_final", [](const sim::MetricsReport& r) { return r.regret_final; }},
      {"wall_ms_opt", [](const sim::MetricsReport& r) -> std::optional<double> { return r.wall_ms_opt; }, true},
      {"wall_ms_lvq", [](const sim::MetricsReport& r) -> std::optional<double> { return r.wall_ms_lvq; }, true},
  };
  return c;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
  f << content;
  f.flush();
  if (!f) throw std::runtime_error("write failed for " + p.string());
}

}  // namespace

std::string metrics_csv(const BatchResult& batch) {
  std::string out(kMetricsHeader);
  out += '\n';
  for (const sim::MetricsReport& r : batch.runs) {
    out += r.policy + "," + std::to_string(r.seed);
    for (const Column& c : columns()) {
      out += ',';
      out += (c.timing && !batch.wall_clock) ? "NA" : opt_num(c.get(r));
    }
    out += '\n';
  }
  return out;
}

std::string latency_cdf_csv(const BatchResult& batch) {
  std::string out(kCdfHeader);
  out += '\n';
  for (const sim::MetricsReport& r : batch.runs) {
    for (const auto& [bin, frac] : r.latency_cdf) {
      out += fmt::format("{},{},{},{}\n", r.policy, r.seed, num(bin), num(frac));
    }
  }
  return out;
}

std::vector<SummaryRow> summarize(const BatchResult& batch) {
  std::vector<SummaryRow> rows;
  for (const std::string& pol : batch.policies) {
    for (const Column& c : columns()) {
      if (c.timing && !batch.wall_clock) continue;
      std::vector<double> vals;
      for (const sim::MetricsReport& r : batch.runs) {
        if (r.policy != pol) continue;
        if (const auto v = c.get(r)) vals.push_back(*v);
      }
      if (vals.empty()) continue;
      SummaryRow row{pol, c.name, 0.0, std::nullopt};
      if (vals.size() >= 2) {
        const sim::ConfidenceInterval ci = sim::confidence_interval(vals);
        row.mean = ci.mean;
        row.ci_halfwidth = ci.halfwidth;
      } else {
        row.mean = vals.front();
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string summary_csv(const BatchResult& batch) {
  std::string out(kSummaryHeader);
  out += '\n';
  for (const SummaryRow& r : summarize(batch)) {
    out += fmt::format("{},{},{},{}\n", r.policy, r.metric, num(r.mean), opt_num(r.ci_halfwidth));
  }
  return out;
}

std::string samples_jsonl(const BatchResult& batch) {
  std::string out;
  for (const sim::MetricsReport& r : batch.runs) {
    for (const DecisionRecord& d : r.samples) {
      for (std::size_t i = 0; i < d.candidates.size(); ++i) {
        nlohmann::ordered_json j;
        j["policy"] = r.policy;
        j["seed"] = r.seed;
        j["interval"] = d.interval;
        j["user"] = d.user;
        j["cell"] = i;
        j["chosen"] = d.chosen;
        j["label_source"] = d.source == LabelSource::Optimizer ? "optimizer" : "gsa";
        j["features"] = d.candidates[i];
        out += j.dump();
        out += '\n';
      }
    }
  }
  return out;
}

OracleCheckResult oracle_check(int instances, std::uint64_t seed, int max_users, int max_cells,
                               double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> users(2, max_users);
  std::uniform_int_distribution<int> cells(2, max_cells);
  std::uniform_real_distribution<double> cost(0.0, 1.0);
  OracleCheckResult res;
  for (int k = 0; k < instances; ++k) {
    const int m = users(rng);
    const int n = cells(rng);
    assoc::CostMatrix c{Matrix<double>(static_cast<std::size_t>(m), static_cast<std::size_t>(n)), 0.3};
    for (std::size_t j = 0; j < c.entries.rows(); ++j)
      for (std::size_t i = 0; i < c.entries.cols(); ++i) c.entries(j, i) = cost(rng);
    std::vector<int> caps(static_cast<std::size_t>(n));
    std::uniform_int_distribution<int> cap(1, m);
    do {
      for (int& v : caps) v = cap(rng);
    } while (std::accumulate(caps.begin(), caps.end(), 0) < m);

    const assoc::AssociationDecision d = assoc::solve(c, caps);
    const assoc::OracleResult o = assoc::brute_force_oracle(c, caps);
    ++res.instances;
    if (!d.feasible || !assoc::satisfies_constraints(d.x, caps)) ++res.infeasible;
    if (d.objective < o.objective - 1e-12) ++res.below_oracle;
    if (d.objective <= (1.0 + tol) * o.objective + 1e-12) ++res.within_tolerance;
    if (o.objective > 0.0) res.worst_ratio = std::max(res.worst_ratio, d.objective / o.objective);
  }
  return res;
}

void write_outputs(const BatchResult& batch, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "metrics.csv", metrics_csv(batch));
  write_file(dir / "latency_cdf.csv", latency_cdf_csv(batch));
  write_file(dir / "samples.jsonl", samples_jsonl(batch));
  write_file(dir / "summary.csv", summary_csv(batch));
}

}  // namespace cellsel::harness
