#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "cellsel/error.hpp"
#include "cellsel/harness.hpp"

namespace cellsel::harness {

namespace {

using Setter = std::function<void(sim::ScenarioConfig&, std::string_view)>;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double to_double(std::string_view v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("not a number");
  return out;
}

template <typename Int>
Int to_int(std::string_view v) {
  Int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("not an integer");
  return out;
}

bool to_bool(std::string_view v) {
  std::string s(v);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument("not a boolean");
}

template <typename T>
Setter num(T sim::ScenarioConfig::*field) {
  return [field](sim::ScenarioConfig& c, std::string_view v) {
    if constexpr (std::is_same_v<T, double>) c.*field = to_double(v);
    else c.*field = to_int<T>(v);
  };
}

#define CFG_DOUBLE(sub, f) \
  [](sim::ScenarioConfig& c, std::string_view v) { c.sub.f = to_double(v); }
#define CFG_INT(sub, f) \
  [](sim::ScenarioConfig& c, std::string_view v) { c.sub.f = to_int<int>(v); }
#define CFG_BOOL(sub, f) \
  [](sim::ScenarioConfig& c, std::string_view v) { c.sub.f = to_bool(v); }

const std::vector<std::pair<std::string, Setter>>& table() {
  static const std::vector<std::pair<std::string, Setter>> t = {
      {"scenario.area", num(&sim::ScenarioConfig::area_m)},
      {"scenario.n_cells", num(&sim::ScenarioConfig::n_cells)},
      {"scenario.n_users", num(&sim::ScenarioConfig::n_users)},
      {"scenario.min_separation", num(&sim::ScenarioConfig::min_separation_m)},
      {"scenario.speed_min", num(&sim::ScenarioConfig::speed_min)},
      {"scenario.speed_max", num(&sim::ScenarioConfig::speed_max)},
      {"scenario.packet_size", num(&sim::ScenarioConfig::packet_bytes)},
      {"scenario.rate_kbps", num(&sim::ScenarioConfig::rate_kbps)},
      {"scenario.buffer", num(&sim::ScenarioConfig::buffer)},
      {"scenario.decision_interval", num(&sim::ScenarioConfig::decision_interval_s)},
      {"scenario.sim_time", num(&sim::ScenarioConfig::sim_time_s)},
      {"scenario.warmup", num(&sim::ScenarioConfig::warmup_s)},
      {"scenario.seed", num(&sim::ScenarioConfig::seed)},
      {"scenario.capacity", num(&sim::ScenarioConfig::capacity)},
      {"scenario.control_delay", num(&sim::ScenarioConfig::control_delay)},

      {"radio.carrier_hz", CFG_DOUBLE(radio, carrier_hz)},
      {"radio.exponent", CFG_DOUBLE(radio, exponent)},
      {"radio.shadowing_std", CFG_DOUBLE(radio, shadowing_std_db)},
      {"radio.freeze_shadowing", CFG_BOOL(radio, freeze_shadowing)},
      {"radio.sbs_tx_dbm", CFG_DOUBLE(radio, sbs_tx_dbm)},
      {"radio.mbs_tx_dbm", CFG_DOUBLE(radio, mbs_tx_dbm)},
      {"radio.ue_max_dbm", CFG_DOUBLE(radio, ue_max_dbm)},
      {"radio.ue_p0_dbm", CFG_DOUBLE(radio, ue_p0_dbm)},
      {"radio.prx_mw", CFG_DOUBLE(radio, prx_mw)},

      {"service.base_rate_pps", CFG_DOUBLE(service, base_rate_pps)},
      {"service.reference_packet_bytes", CFG_INT(service, reference_packet_bytes)},
      {"service.fade_min", CFG_DOUBLE(service, fade_min)},
      {"service.fade_max", CFG_DOUBLE(service, fade_max)},
      {"service.fading", CFG_BOOL(service, fading)},
      {"service.rate_spread", CFG_DOUBLE(service, rate_spread)},
      {"service.c_tilde", CFG_DOUBLE(service, c_tilde)},
      {"service.greedy_window", CFG_INT(service, greedy_window)},
      {"service.stats_window", CFG_INT(service, stats_window)},
      {"service.slot_service_samples", CFG_BOOL(service, slot_service_samples)},
      {"service.link_adaptation", CFG_BOOL(service, link_adaptation)},
      {"service.link_snr_db", CFG_DOUBLE(service, link_snr_db)},
      {"service.link_max_units", CFG_DOUBLE(service, link_max_units)},

      {"indicators.alpha", CFG_DOUBLE(indicators, alpha)},
      {"indicators.beta1", CFG_DOUBLE(indicators, beta1)},
      {"indicators.gamma", CFG_DOUBLE(indicators, gamma)},
      {"indicators.beta2", CFG_DOUBLE(indicators, beta2)},
      {"indicators.delta", CFG_DOUBLE(indicators, delta)},
      {"indicators.eta1", CFG_DOUBLE(indicators, eta1)},
      {"indicators.eta2", CFG_DOUBLE(indicators, eta2)},

      {"optimizer.max_iter", num(&sim::ScenarioConfig::opt_max_iter)},
      {"optimizer.step_a0", num(&sim::ScenarioConfig::opt_step_a0)},

      {"controller.bootstrap_intervals", num(&sim::ScenarioConfig::bootstrap_intervals)},
      {"controller.reopt_period", num(&sim::ScenarioConfig::reopt_period)},
      {"controller.qos_threshold", num(&sim::ScenarioConfig::qos_threshold)},
      {"controller.qos_window", num(&sim::ScenarioConfig::qos_window)},
      {"controller.store_window", num(&sim::ScenarioConfig::store_window)},

      {"lvq.prototypes_per_cell", num(&sim::ScenarioConfig::prototypes_per_cell)},
      {"lvq.initial_rate", num(&sim::ScenarioConfig::lvq_initial_rate)},
      {"lvq.decay", num(&sim::ScenarioConfig::lvq_decay)},
      {"lvq.bootstrap_epochs", num(&sim::ScenarioConfig::bootstrap_epochs)},
      {"lvq.incremental_epochs", num(&sim::ScenarioConfig::incremental_epochs)},
      {"lvq.validation_fraction", num(&sim::ScenarioConfig::validation_fraction)},

      {"policy.name",
       [](sim::ScenarioConfig& c, std::string_view v) {
         const auto tag = policy::parse_policy(v);
         if (!tag) throw std::invalid_argument("unknown policy");
         c.policy.tag = *tag;
       }},
      {"policy.ablation",
       [](sim::ScenarioConfig& c, std::string_view v) {
         const auto a = policy::ablation_variant(v);
         if (!a) throw std::invalid_argument("unknown ablation variant");
         c.policy.ablation = *a;
       }},
      {"policy.lhr_weight", num(&sim::ScenarioConfig::lhr_weight)},
      {"policy.disable_lvq", CFG_BOOL(policy.ablation, disable_lvq)},
      {"policy.disable_opt_labels", CFG_BOOL(policy.ablation, disable_opt_labels)},
      {"policy.disable_queue_awareness", CFG_BOOL(policy.ablation, disable_queue_awareness)},
      {"policy.disable_energy", CFG_BOOL(policy.ablation, disable_energy)},
      {"policy.disable_service_indicators", CFG_BOOL(policy.ablation, disable_service_indicators)},

      {"output.wall_clock", CFG_BOOL(output, wall_clock)},
      {"output.sample_log", CFG_BOOL(output, sample_log)},
      {"output.track_regret", CFG_BOOL(output, track_regret)},
      {"output.cell_trace", CFG_BOOL(output, cell_trace)},
  };
  return t;
}

#undef CFG_DOUBLE
#undef CFG_INT
#undef CFG_BOOL

const std::map<std::string, std::vector<std::string>, std::less<>>& aliases() {
  static const std::map<std::string, std::vector<std::string>, std::less<>> a = {
      {"speed", {"scenario.speed_min", "scenario.speed_max"}},
      {"rate", {"scenario.rate_kbps"}},
      {"packet_size", {"scenario.packet_size"}},
      {"n_users", {"scenario.n_users"}},
      {"n_cells", {"scenario.n_cells"}},
      {"control_delay", {"scenario.control_delay"}},
      {"reopt_period", {"controller.reopt_period"}},
  };
  return a;
}

void set_one(sim::ScenarioConfig& cfg, std::string_view key, std::string_view value, int line) {
  const auto& t = table();
  const auto it = std::find_if(t.begin(), t.end(), [&](const auto& e) { return e.first == key; });
  if (it == t.end()) throw ConfigError("unknown key '" + std::string(key) + "'", std::string(key), line);
  try {
    it->second(cfg, trim(value));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("bad value '" + std::string(value) + "' for '" + std::string(key) +
                          "': " + e.what(),
                      std::string(key), line);
  }
}

}  // namespace

void apply_setting(sim::ScenarioConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  if (const auto a = aliases().find(key); a != aliases().end()) {
    for (const std::string& k : a->second) set_one(cfg, k, value, 0);
    return;
  }
  set_one(cfg, key, value, 0);
}

std::vector<std::string> known_keys() {
  std::vector<std::string> out;
  for (const auto& e : table()) out.push_back(e.first);
  return out;
}

sim::ScenarioConfig parse_config(std::string_view text) {
  sim::ScenarioConfig cfg;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view s = raw;
    if (const auto hash = s.find_first_of("#;"); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("unterminated section header", {}, line);
      section = std::string(trim(s.substr(1, s.size() - 2)));
      if (section.empty()) throw ConfigError("empty section name", {}, line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key = value", {}, line);
    const std::string_view k = trim(s.substr(0, eq));
    const std::string_view v = trim(s.substr(eq + 1));
    if (k.empty()) throw ConfigError("empty key", {}, line);
    if (v.empty()) throw ConfigError("empty value for '" + std::string(k) + "'", std::string(k), line);
    std::string key;
    if (section.empty()) {
      if (k.find('.') == std::string_view::npos) {
        throw ConfigError("key '" + std::string(k) + "' outside a section must be qualified",
                          std::string(k), line);
      }
      key = std::string(k);
    } else {
      key = section + "." + std::string(k);
    }
    set_one(cfg, key, v, line);
  }
  cfg.validate();
  return cfg;
}

sim::ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    const std::string where =
        path.string() + (e.line() > 0 ? ":" + std::to_string(e.line()) : std::string());
    throw ConfigError(where + ": " + e.what(), e.key(), e.line());
  }
}

}  // namespace cellsel::harness
