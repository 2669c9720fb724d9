#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cellsel/netsim.hpp"
#include "cellsel/policies.hpp"

namespace cellsel::harness {

// Parses the sectioned key=value format:
//
//   # comment
//   [scenario]
//   n_users = 80
//   [policy]
//   name = proposed
//
// Keys may also be written fully qualified ("scenario.n_users = 80") outside
// any section. Unknown keys, malformed values and invariant violations raise
// ConfigError with the key and line number.
sim::ScenarioConfig parse_config(std::string_view text);
sim::ScenarioConfig load_config(const std::filesystem::path& path);

// Applies one qualified "section.key" assignment. Also accepts the sweep
// aliases speed, rate, packet_size, n_users, n_cells, control_delay and
// reopt_period. Does not re-validate.
void apply_setting(sim::ScenarioConfig& cfg, std::string_view key, std::string_view value);

// Every accepted qualified key, in documentation order.
std::vector<std::string> known_keys();

// Seed for run k of a batch: master_seed + k.
std::vector<std::uint64_t> derive_seeds(std::uint64_t master_seed, int n_runs);

class RunError : public std::runtime_error {
 public:
  RunError(const std::string& what, std::string policy, std::uint64_t seed)
      : std::runtime_error(what), policy_(std::move(policy)), seed_(seed) {}
  const std::string& policy() const noexcept { return policy_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::string policy_;
  std::uint64_t seed_;
};

struct BatchResult {
  std::vector<sim::MetricsReport> runs;  // ordered by (policy, seed)
  std::vector<std::string> policies;     // labels in the requested order
  bool wall_clock = false;
};

using Progress = std::function<void(const sim::MetricsReport&)>;

// Runs every policy on the same derived seeds, `jobs` runs at a time. The
// result order is (policy, seed) regardless of jobs; progress is called under
// a lock in completion order. Errors are rethrown as RunError naming the
// policy and seed.
BatchResult run_batch(const sim::ScenarioConfig& base, int n_runs, std::uint64_t master_seed,
                      std::span<const policy::PolicyKind> policies, const Progress& progress = {},
                      int jobs = 1);

struct SummaryRow {
  std::string policy;
  std::string metric;
  double mean = 0.0;
  std::optional<double> ci_halfwidth;
};

// Per-policy mean and 95% halfwidth of every per-run metric column that has
// values.
std::vector<SummaryRow> summarize(const BatchResult& batch);

inline constexpr std::string_view kMetricsHeader =
    "policy,seed,mean_latency_ms,p95_latency_ms,plr,handovers,approx_error,regret_final,"
    "wall_ms_opt,wall_ms_lvq";
inline constexpr std::string_view kCdfHeader = "policy,seed,bin_ms,cum_fraction";
inline constexpr std::string_view kSummaryHeader = "policy,metric,mean,ci_halfwidth";

std::string metrics_csv(const BatchResult& batch);
std::string latency_cdf_csv(const BatchResult& batch);
std::string summary_csv(const BatchResult& batch);
// One JSON object per (run, interval, user, candidate cell).
std::string samples_jsonl(const BatchResult& batch);

// Writes metrics.csv, latency_cdf.csv, samples.jsonl and summary.csv into
// `dir`, creating it if needed. Throws std::runtime_error naming the path on
// I/O failure.
void write_outputs(const BatchResult& batch, const std::filesystem::path& dir);

struct OracleCheckResult {
  int instances = 0;
  int infeasible = 0;       // solve returned an infeasible assignment
  int within_tolerance = 0; // objective <= (1 + tol) * oracle objective
  int below_oracle = 0;     // objective < oracle objective (must never happen)
  double worst_ratio = 1.0;
};

// Random instances with 2..max_users users, 2..max_cells cells, costs uniform
// in [0, 1) and capacities uniform in [1, users] resampled until their sum
// covers the users. Compares solve against brute_force_oracle.
OracleCheckResult oracle_check(int instances, std::uint64_t seed, int max_users = 6,
                               int max_cells = 3, double tol = 0.05);

}  // namespace cellsel::harness
