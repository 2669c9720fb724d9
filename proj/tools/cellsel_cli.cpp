// Command-line front end: run, sweep, ablate, oracle-check.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "cellsel/error.hpp"
#include "cellsel/harness.hpp"

namespace {

using namespace cellsel;

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct CommonOpts {
  std::string config;
  std::optional<std::uint64_t> seed;
  int runs = 1;
  std::vector<std::string> policies;
  std::string out = "out";
  std::vector<std::string> settings;
  bool samples = false;
  bool wall_clock = false;
  bool quiet = false;
  int jobs = 1;
};

void add_common(CLI::App* app, CommonOpts& o) {
  app->add_option("--config", o.config, "Scenario config file (sectioned key = value)");
  app->add_option("--seed", o.seed, "Master seed; run k uses seed + k");
  app->add_option("--runs", o.runs, "Independent runs per policy")->check(CLI::PositiveNumber);
  app->add_option("--policy", o.policies,
                  "Policy: max-rsrp, lhr, gsa, proposed (repeatable)");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--set", o.settings, "Override a config key, e.g. scenario.n_users=120");
  app->add_flag("--samples", o.samples, "Write labeled decision records to samples.jsonl");
  app->add_flag("--wall-clock", o.wall_clock, "Write decision-layer timing columns");
  app->add_flag("-q,--quiet", o.quiet, "No per-run progress lines");
  app->add_option("-j,--jobs", o.jobs, "Runs executed concurrently")->check(CLI::PositiveNumber);
}

sim::ScenarioConfig build_config(const CommonOpts& o) {
  sim::ScenarioConfig cfg = o.config.empty() ? harness::parse_config("")
                                             : harness::load_config(o.config);
  for (const std::string& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    harness::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (o.samples) cfg.output.sample_log = true;
  if (o.wall_clock) cfg.output.wall_clock = true;
  cfg.validate();
  return cfg;
}

std::vector<policy::PolicyKind> build_policies(const CommonOpts& o, const sim::ScenarioConfig& cfg) {
  std::vector<policy::PolicyKind> out;
  if (o.policies.empty()) {
    out.push_back(cfg.policy);
    return out;
  }
  for (const std::string& name : o.policies) {
    const auto tag = policy::parse_policy(name);
    if (!tag) throw ConfigError("unknown policy '" + name + "'", "policy");
    policy::PolicyKind pk{*tag, {}};
    if (*tag == cfg.policy.tag) pk.ablation = cfg.policy.ablation;
    out.push_back(pk);
  }
  return out;
}

harness::Progress progress(bool quiet) {
  if (quiet) return {};
  return [](const sim::MetricsReport& r) {
    std::cerr << fmt::format("{} seed {}: mean {:.3f} ms, p95 {:.3f} ms, plr {:.5f}, handovers {}\n",
                             r.policy, r.seed, r.mean_latency_s * 1e3, r.p95_latency_s * 1e3, r.plr,
                             r.handovers);
  };
}

void print_summary(const harness::BatchResult& b) {
  for (const harness::SummaryRow& r : harness::summarize(b)) {
    std::cout << fmt::format("{:<18} {:<16} {:>14.6g}", r.policy, r.metric, r.mean);
    if (r.ci_halfwidth) std::cout << fmt::format(" +/- {:.6g}", *r.ci_halfwidth);
    std::cout << '\n';
  }
}

int cmd_run(const CommonOpts& o) {
  const sim::ScenarioConfig cfg = build_config(o);
  const auto pols = build_policies(o, cfg);
  const auto batch = harness::run_batch(cfg, o.runs, o.seed.value_or(cfg.seed), pols, progress(o.quiet), o.jobs);
  harness::write_outputs(batch, o.out);
  print_summary(batch);
  return 0;
}

int cmd_sweep(const CommonOpts& o, const std::string& key, const std::vector<std::string>& values) {
  const sim::ScenarioConfig base = build_config(o);
  for (const std::string& v : values) {
    sim::ScenarioConfig cfg = base;
    harness::apply_setting(cfg, key, v);
    cfg.validate();
    const auto pols = build_policies(o, cfg);
    if (!o.quiet) std::cerr << fmt::format("-- {} = {}\n", key, v);
    const auto batch =
        harness::run_batch(cfg, o.runs, o.seed.value_or(cfg.seed), pols, progress(o.quiet), o.jobs);
    harness::write_outputs(batch, std::filesystem::path(o.out) / fmt::format("{}={}", key, v));
    std::cout << fmt::format("[{} = {}]\n", key, v);
    print_summary(batch);
  }
  return 0;
}

int cmd_ablate(const CommonOpts& o, const std::vector<std::string>& variants) {
  sim::ScenarioConfig cfg = build_config(o);
  std::vector<policy::PolicyKind> pols;
  for (const std::string& v : variants) {
    const auto a = policy::ablation_variant(v);
    if (!a) throw ConfigError("unknown ablation variant '" + v + "'", "policy.ablation");
    pols.push_back({policy::PolicyTag::Proposed, *a});
  }
  const auto batch = harness::run_batch(cfg, o.runs, o.seed.value_or(cfg.seed), pols, progress(o.quiet), o.jobs);
  harness::write_outputs(batch, o.out);
  print_summary(batch);
  return 0;
}

int cmd_oracle(int instances, std::uint64_t seed, int users, int cells, double tol) {
  const harness::OracleCheckResult r = harness::oracle_check(instances, seed, users, cells, tol);
  std::cout << fmt::format(
      "instances {}\ninfeasible {}\nwithin {:.0f}% of oracle {} ({:.1f}%)\nbelow oracle {}\n"
      "worst ratio {:.6f}\n",
      r.instances, r.infeasible, tol * 100.0, r.within_tolerance,
      100.0 * r.within_tolerance / std::max(r.instances, 1), r.below_oracle, r.worst_ratio);
  return (r.infeasible == 0 && r.below_oracle == 0) ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Queue-aware small-cell association simulator"};
  app.require_subcommand(1);

  CommonOpts run_o, sweep_o, ablate_o;
  auto* run = app.add_subcommand("run", "Run one scenario for one or more policies");
  add_common(run, run_o);

  auto* sweep = app.add_subcommand("sweep", "Vary one config key over a list of values");
  add_common(sweep, sweep_o);
  std::string sweep_key;
  std::vector<std::string> sweep_values;
  sweep->add_option("--key", sweep_key,
                    "speed, rate, packet_size, n_users, n_cells, control_delay, reopt_period "
                    "or any section.key")
      ->required();
  sweep->add_option("--values", sweep_values, "Values to try")->required()->delimiter(',');

  auto* ablate = app.add_subcommand("ablate", "Run the proposed controller with ablations");
  add_common(ablate, ablate_o);
  std::vector<std::string> variants{"full", "A1", "A2", "A3", "A4", "A5"};
  ablate->add_option("--variants", variants, "Subset of full, A1..A5")->delimiter(',');

  auto* oracle = app.add_subcommand("oracle-check", "Compare the solver with exhaustive search");
  int instances = 200, o_users = 6, o_cells = 3;
  std::uint64_t o_seed = 1;
  double tol = 0.05;
  oracle->add_option("--instances", instances)->check(CLI::PositiveNumber);
  oracle->add_option("--seed", o_seed);
  oracle->add_option("--users", o_users, "Maximum users per instance")->check(CLI::Range(2, 8));
  oracle->add_option("--cells", o_cells, "Maximum cells per instance")->check(CLI::Range(2, 6));
  oracle->add_option("--tolerance", tol)->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return cmd_run(run_o);
    if (*sweep) return cmd_sweep(sweep_o, sweep_key, sweep_values);
    if (*ablate) return cmd_ablate(ablate_o, variants);
    if (*oracle) return cmd_oracle(instances, o_seed, o_users, o_cells, tol);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
