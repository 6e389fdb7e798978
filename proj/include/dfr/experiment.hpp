#pragma once

// Experiment layer behind the command-line tool: flat key=value run
// configuration, (strategy, n, seed) batches over shared failure traces, and
// the versioned CSV / JSON output schemas.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dfr/energy_model.hpp"
#include "dfr/engine.hpp"
#include "dfr/failure_injection.hpp"
#include "dfr/platform.hpp"
#include "dfr/stats.hpp"
#include "dfr/strategies.hpp"
#include "dfr/task_graph.hpp"

namespace dfr::exp {

inline constexpr int kCsvSchemaVersion = 1;
inline constexpr int kSweepSchemaVersion = 1;
inline constexpr int kTraceSchemaVersion = 1;

inline constexpr std::string_view kResultColumns =
    "strategy,n,seed,failures_fired,recomputed_tasks,makespan_s,total_energy_J,projected_savings_J,config_hash";

/// Bad keys, bad values, unmet preconditions of a run configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_number(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("invalid number for " + std::string(what) + ": '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("invalid number for " + std::string(what) + ": '" + s + "'");
  return v;
}

inline std::int64_t parse_integer(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("invalid integer for " + std::string(what) + ": '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("invalid integer for " + std::string(what) + ": '" + s + "'");
  return v;
}

inline bool parse_bool(std::string_view text, std::string_view what) {
  const auto s = trim(text);
  if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "off" || s == "no") return false;
  throw ConfigError("invalid boolean for " + std::string(what) + ": '" + s + "'");
}

/// "3600", "3600s", "100h", "50y" (365-day years) -> seconds.
inline double parse_duration(std::string_view text) {
  std::string s = trim(text);
  if (s.empty()) throw ConfigError("empty duration");
  double scale = 1.0;
  switch (s.back()) {
    case 's': scale = 1.0; s.pop_back(); break;
    case 'h': scale = model::kSecondsPerHour; s.pop_back(); break;
    case 'y': scale = model::kSecondsPerYear; s.pop_back(); break;
    default:
      if (!std::isdigit(static_cast<unsigned char>(s.back())) && s.back() != '.') {
        throw ConfigError("bad time unit in '" + std::string(text) + "' (expected s, h or y)");
      }
  }
  const double v = parse_number(s, "duration") * scale;
  if (!(v > 0)) throw ConfigError("duration must be positive: '" + std::string(text) + "'");
  return v;
}

/// "1,2,5" or "1..10" (inclusive), or a mix: "1..3,8".
inline std::vector<std::int64_t> parse_int_list(std::string_view text, std::string_view what) {
  std::vector<std::int64_t> out;
  for (const auto& part : split(text, ',')) {
    if (part.empty()) throw ConfigError("empty entry in " + std::string(what));
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_integer(part, what));
      continue;
    }
    const auto lo = parse_integer(part.substr(0, dots), what);
    const auto hi = parse_integer(part.substr(dots + 2), what);
    if (hi < lo) throw ConfigError("empty range in " + std::string(what) + ": '" + part + "'");
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v, const std::function<std::string(const T&)>& f, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += f(v[i]);
  }
  return out;
}

/// Defaults are the full-scale weak-scaling setup: 1000 iterations of
/// 10 s, checkpoints every 6 iterations, 100 h node MTBF, 10 seeds.
struct RunConfig {
  std::vector<std::int64_t> n{100};
  std::int64_t iterations = 1000;
  std::int64_t checkpoint_interval = 6;
  double node_mtbf = 100 * model::kSecondsPerHour;
  std::optional<double> horizon;  // unset: iterations x task duration
  std::vector<std::int64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<StrategyKind> strategies{StrategyKind::Global, StrategyKind::DfrMinimal, StrategyKind::LogBased};
  PlatformModel platform;
  bool frequency_scaling = false;
  double joules_per_task = 500.0;
  std::string csv = "results.csv";
  std::string trace_dir = "traces";  // empty: no per-run traces
  bool trace_timeline = false;
  std::string sweep_csv = "sweep.csv";
  std::string fit_report = "fit.json";

  double resolved_horizon() const {
    return horizon ? *horizon : static_cast<double>(iterations) * task_duration(platform.task_flops, platform.host);
  }

  void validate() const {
    if (n.empty()) throw ConfigError("n: at least one node count required");
    for (auto v : n) {
      if (v < 1) throw ConfigError("n must be >= 1");
    }
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (checkpoint_interval < 1) throw ConfigError("checkpoint_interval must be >= 1");
    if (!(node_mtbf > 0)) throw ConfigError("node_mtbf must be positive");
    if (horizon && !(*horizon > 0)) throw ConfigError("horizon must be positive");
    if (seeds.empty()) throw ConfigError("seeds: at least one seed required");
    for (auto s : seeds) {
      if (s < 0) throw ConfigError("seeds must be >= 0");
    }
    if (strategies.empty()) throw ConfigError("strategies: at least one strategy required");
    if (!(joules_per_task >= 0)) throw ConfigError("joules_per_task must be >= 0");
    try {
      platform.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
};

struct ConfigKey {
  std::string_view name;
  bool hashed;  // output locations do not change results
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline std::string strategies_to_string(const std::vector<StrategyKind>& v) {
  return join<StrategyKind>(v, [](const StrategyKind& s) { return std::string(to_string(s)); });
}

inline std::vector<StrategyKind> parse_strategies(std::string_view text) {
  if (trim(text) == "all") return {StrategyKind::Global, StrategyKind::DfrMinimal, StrategyKind::LogBased};
  if (trim(text) == "every") {
    return {StrategyKind::Global, StrategyKind::DfrRectangular, StrategyKind::DfrMinimal, StrategyKind::LogBased};
  }
  std::vector<StrategyKind> out;
  for (const auto& part : split(text, ',')) {
    StrategyKind s;
    try {
      s = parse_strategy(part);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

inline const std::vector<ConfigKey>& config_keys() {
  using C = RunConfig;
  const auto ints = [](const std::vector<std::int64_t>& v) {
    return join<std::int64_t>(v, [](const std::int64_t& x) { return std::to_string(x); });
  };
  static const std::vector<ConfigKey> keys = {
      {"n", true, [](C& c, const std::string& v) { c.n = parse_int_list(v, "n"); },
       [ints](const C& c) { return ints(c.n); }},
      {"iterations", true, [](C& c, const std::string& v) { c.iterations = parse_integer(v, "iterations"); },
       [](const C& c) { return std::to_string(c.iterations); }},
      {"checkpoint_interval", true,
       [](C& c, const std::string& v) { c.checkpoint_interval = parse_integer(v, "checkpoint_interval"); },
       [](const C& c) { return std::to_string(c.checkpoint_interval); }},
      {"node_mtbf", true, [](C& c, const std::string& v) { c.node_mtbf = parse_duration(v); },
       [](const C& c) { return fmt_double(c.node_mtbf); }},
      {"horizon", true,
       [](C& c, const std::string& v) {
         if (trim(v) == "auto") {
           c.horizon.reset();
         } else {
           c.horizon = parse_duration(v);
         }
       },
       [](const C& c) { return c.horizon ? fmt_double(*c.horizon) : std::string("auto"); }},
      {"seeds", true, [](C& c, const std::string& v) { c.seeds = parse_int_list(v, "seeds"); },
       [ints](const C& c) { return ints(c.seeds); }},
      {"strategies", true, [](C& c, const std::string& v) { c.strategies = parse_strategies(v); },
       [](const C& c) { return strategies_to_string(c.strategies); }},
      {"flops_rate", true, [](C& c, const std::string& v) { c.platform.host.flops_rate = parse_number(v, "flops_rate"); },
       [](const C& c) { return fmt_double(c.platform.host.flops_rate); }},
      {"task_flops", true, [](C& c, const std::string& v) { c.platform.task_flops = parse_number(v, "task_flops"); },
       [](const C& c) { return fmt_double(c.platform.task_flops); }},
      {"bandwidth", true, [](C& c, const std::string& v) { c.platform.link.bandwidth = parse_number(v, "bandwidth"); },
       [](const C& c) { return fmt_double(c.platform.link.bandwidth); }},
      {"latency", true, [](C& c, const std::string& v) { c.platform.link.latency = parse_number(v, "latency"); },
       [](const C& c) { return fmt_double(c.platform.link.latency); }},
      {"element_bytes", true,
       [](C& c, const std::string& v) { c.platform.element_bytes = parse_number(v, "element_bytes"); },
       [](const C& c) { return fmt_double(c.platform.element_bytes); }},
      {"subdomain_elements", true,
       [](C& c, const std::string& v) { c.platform.subdomain_elements = parse_number(v, "subdomain_elements"); },
       [](const C& c) { return fmt_double(c.platform.subdomain_elements); }},
      {"model_reload_traffic", true,
       [](C& c, const std::string& v) { c.platform.model_reload_traffic = parse_bool(v, "model_reload_traffic"); },
       [](const C& c) { return std::string(c.platform.model_reload_traffic ? "true" : "false"); }},
      {"power_computing", true,
       [](C& c, const std::string& v) { c.platform.power.computing = parse_number(v, "power_computing"); },
       [](const C& c) { return fmt_double(c.platform.power.computing); }},
      {"power_communicating", true,
       [](C& c, const std::string& v) { c.platform.power.communicating = parse_number(v, "power_communicating"); },
       [](const C& c) { return fmt_double(c.platform.power.communicating); }},
      {"power_idle_unscaled", true,
       [](C& c, const std::string& v) { c.platform.power.idle_unscaled = parse_number(v, "power_idle_unscaled"); },
       [](const C& c) { return fmt_double(c.platform.power.idle_unscaled); }},
      {"power_idle_scaled", true,
       [](C& c, const std::string& v) { c.platform.power.idle_scaled = parse_number(v, "power_idle_scaled"); },
       [](const C& c) { return fmt_double(c.platform.power.idle_scaled); }},
      {"frequency_scaling", true,
       [](C& c, const std::string& v) { c.frequency_scaling = parse_bool(v, "frequency_scaling"); },
       [](const C& c) { return std::string(c.frequency_scaling ? "true" : "false"); }},
      {"joules_per_task", true,
       [](C& c, const std::string& v) { c.joules_per_task = parse_number(v, "joules_per_task"); },
       [](const C& c) { return fmt_double(c.joules_per_task); }},
      {"csv", false, [](C& c, const std::string& v) { c.csv = trim(v); }, [](const C& c) { return c.csv; }},
      {"trace_dir", false, [](C& c, const std::string& v) { c.trace_dir = trim(v); },
       [](const C& c) { return c.trace_dir; }},
      {"trace_timeline", false,
       [](C& c, const std::string& v) { c.trace_timeline = parse_bool(v, "trace_timeline"); },
       [](const C& c) { return std::string(c.trace_timeline ? "true" : "false"); }},
      {"sweep_csv", false, [](C& c, const std::string& v) { c.sweep_csv = trim(v); },
       [](const C& c) { return c.sweep_csv; }},
      {"fit_report", false, [](C& c, const std::string& v) { c.fit_report = trim(v); },
       [](const C& c) { return c.fit_report; }},
  };
  return keys;
}

inline void set_config_value(RunConfig& cfg, std::string_view key, const std::string& value) {
  for (const auto& k : config_keys()) {
    if (k.name == key) {
      k.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

/// Applies "key = value" lines; '#' starts a comment.
inline void apply_config_text(RunConfig& cfg, std::string_view text, std::string_view origin = "config") {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set_config_value(cfg, trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

/// "key=value" override as given on the command line.
inline void apply_override(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  set_config_value(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

/// Resolved configuration, one "key=value" per entry, in fixed key order.
inline std::vector<std::string> canonical_config(const RunConfig& cfg, bool hashed_only = false) {
  std::vector<std::string> out;
  for (const auto& k : config_keys()) {
    if (hashed_only && !k.hashed) continue;
    out.push_back(std::string(k.name) + "=" + k.get(cfg));
  }
  return out;
}

/// FNV-1a 64 over the hashed canonical entries, as 16 hex digits.
inline std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& line : canonical_config(cfg, true)) {
    for (unsigned char ch : line + "\n") {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct ResultRow {
  StrategyKind strategy = StrategyKind::Global;
  std::int64_t n = 0;
  std::int64_t seed = 0;
  std::int64_t failures_fired = 0;
  std::int64_t recomputed_tasks = 0;
  double makespan_s = 0.0;
  double total_energy_J = 0.0;
  double projected_savings_J = 0.0;
  std::string config_hash;
  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline std::string to_csv(const ResultRow& r) {
  return std::string(to_string(r.strategy)) + "," + std::to_string(r.n) + "," + std::to_string(r.seed) + "," +
         std::to_string(r.failures_fired) + "," + std::to_string(r.recomputed_tasks) + "," + fmt_double(r.makespan_s) +
         "," + fmt_double(r.total_energy_J) + "," + fmt_double(r.projected_savings_J) + "," + r.config_hash;
}

/// Everything about one run that a trace file records.
struct RunOutput {
  ResultRow row;
  const SimResult* result = nullptr;
  const FailureTrace* trace = nullptr;
};

using RunObserver = std::function<void(const RunOutput&)>;

/// All (n, seed, strategy) runs. Every strategy sees the same per-seed trace;
/// the global run is always executed as the savings reference. Rows come out
/// ordered by n, then seed, then the configured strategy order.
inline std::vector<ResultRow> simulate(const RunConfig& cfg, const RunObserver& observe = nullptr) {
  cfg.validate();
  const auto hash = config_hash(cfg);
  std::vector<ResultRow> rows;
  SimOptions options;
  options.frequency_scaling = cfg.frequency_scaling;
  options.record_timeline = cfg.trace_timeline;
  for (auto n : cfg.n) {
    auto graph = build_task_graph(ProcessTopology::line(n), cfg.iterations, cfg.checkpoint_interval,
                                  cfg.platform.task_flops);
    for (auto seed : cfg.seeds) {
      const auto trace = generate_trace(static_cast<std::uint64_t>(seed), n, cfg.node_mtbf, cfg.resolved_horizon());
      std::map<StrategyKind, SimResult> results;
      results.emplace(StrategyKind::Global, run_simulation(graph, cfg.platform, trace, StrategyKind::Global, options));
      const auto reference = results.at(StrategyKind::Global).metrics.recomputed_tasks;
      for (auto s : cfg.strategies) {
        if (!results.count(s)) results.emplace(s, run_simulation(graph, cfg.platform, trace, s, options));
        auto& res = results.at(s);
        res.metrics.projected_savings =
            model::project_savings(static_cast<double>(reference - res.metrics.recomputed_tasks), cfg.joules_per_task);
        ResultRow row;
        row.strategy = s;
        row.n = n;
        row.seed = seed;
        row.failures_fired = res.metrics.failures_fired;
        row.recomputed_tasks = res.metrics.recomputed_tasks;
        row.makespan_s = res.metrics.makespan;
        row.total_energy_J = res.metrics.total_energy;
        row.projected_savings_J = res.metrics.projected_savings;
        row.config_hash = hash;
        if (observe) observe(RunOutput{row, &res, &trace});
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

inline void write_metadata(std::ostream& out, std::string_view schema, int version, const RunConfig& cfg,
                           std::string_view generated_at) {
  out << "# schema: " << schema << " v" << version << "\n";
  out << "# prng: " << kPrngIdentity << "\n";
  out << "# config_hash: " << config_hash(cfg) << "\n";
  for (const auto& line : canonical_config(cfg)) out << "# config: " << line << "\n";
  out << "# generated_at: " << generated_at << "\n";
}

/// Comment lines (schema version, PRNG identity, resolved config, timestamp)
/// followed by the column header and one line per row.
inline void write_results_csv(std::ostream& out, const RunConfig& cfg, const std::vector<ResultRow>& rows,
                              std::string_view generated_at) {
  write_metadata(out, "dfr-results", kCsvSchemaVersion, cfg, generated_at);
  out << kResultColumns << "\n";
  for (const auto& r : rows) out << to_csv(r) << "\n";
}

inline nlohmann::json trace_json(const RunConfig& cfg, const RunOutput& run) {
  using nlohmann::json;
  json j;
  j["schema"] = "dfr-trace";
  j["schema_version"] = kTraceSchemaVersion;
  j["prng"] = std::string(kPrngIdentity);
  j["config_hash"] = run.row.config_hash;
  j["strategy"] = std::string(to_string(run.row.strategy));
  j["n"] = run.row.n;
  j["seed"] = run.row.seed;
  j["iterations"] = cfg.iterations;
  j["checkpoint_interval"] = cfg.checkpoint_interval;
  j["horizon_s"] = cfg.resolved_horizon();
  const auto& m = run.result->metrics;
  j["metrics"] = {{"makespan_s", m.makespan},
                  {"recomputed_tasks", m.recomputed_tasks},
                  {"failures_fired", m.failures_fired},
                  {"completed_tasks", m.completed_tasks},
                  {"aborted_tasks", m.aborted_tasks},
                  {"total_energy_J", m.total_energy},
                  {"projected_savings_J", m.projected_savings},
                  {"per_host_energy_J", m.per_host_energy}};
  json failures = json::array();
  for (const auto& ev : run.trace->events) failures.push_back({{"time_s", ev.time}, {"host", ev.host}});
  j["failure_events"] = failures;
  json recoveries = json::array();
  for (const auto& r : run.result->recoveries) {
    recoveries.push_back({{"failed_host", r.event.host},
                          {"scheduled_s", r.event.time},
                          {"fired_s", r.fired_at},
                          {"deferred", r.deferred},
                          {"end_s", r.end},
                          {"failed_iter", r.failed_iter},
                          {"last_ckpt_iter", r.last_ckpt_iter},
                          {"offset", r.offset},
                          {"recomputed_tasks", r.recomputed},
                          {"participants", r.participants}});
  }
  j["recoveries"] = recoveries;
  if (cfg.trace_timeline) {
    json hosts = json::array();
    for (const auto& host : run.result->timeline.hosts) {
      json iv = json::array();
      for (const auto& s : host) iv.push_back({s.start, s.end, std::string(to_string(s.state))});
      hosts.push_back(iv);
    }
    j["timeline"] = hosts;
  }
  return j;
}

inline std::string trace_file_name(const ResultRow& row) {
  return "run_" + std::string(to_string(row.strategy)) + "_n" + std::to_string(row.n) + "_s" +
         std::to_string(row.seed) + ".json";
}

struct SweepPoint {
  StrategyKind strategy = StrategyKind::Global;
  std::int64_t n = 0;
  std::int64_t runs = 0;
  double mean_failures = 0;
  double mean_recomputed = 0;
  double min_recomputed = 0;
  double max_recomputed = 0;
  double recomputed_per_failure = 0;  // pooled: total recomputed / total failures
  double mean_makespan = 0;
  double min_makespan = 0;
  double max_makespan = 0;
  double mean_energy = 0;
  double mean_savings = 0;
  double min_savings = 0;
  double max_savings = 0;
};

struct SweepFit {
  StrategyKind strategy = StrategyKind::Global;
  stats::PolyFit linear;
  stats::PolyFit quadratic;
};

struct SweepReport {
  std::vector<SweepPoint> points;  // ordered by strategy (config order), then n
  std::vector<SweepFit> fits;      // projected savings vs n, non-global strategies
};

inline SweepReport aggregate(const std::vector<ResultRow>& rows, const std::vector<StrategyKind>& strategies) {
  std::vector<std::int64_t> ns;
  for (const auto& r : rows) {
    if (std::find(ns.begin(), ns.end(), r.n) == ns.end()) ns.push_back(r.n);
  }
  std::sort(ns.begin(), ns.end());
  if (ns.size() < 3) throw ConfigError("insufficient points for fit: sweep needs >= 3 distinct node counts");

  SweepReport report;
  for (auto s : strategies) {
    std::vector<double> xs, ys;
    for (auto n : ns) {
      SweepPoint p;
      p.strategy = s;
      p.n = n;
      double failures = 0, recomputed = 0;
      bool first = true;
      for (const auto& r : rows) {
        if (r.strategy != s || r.n != n) continue;
        const auto rec = static_cast<double>(r.recomputed_tasks);
        p.runs++;
        failures += static_cast<double>(r.failures_fired);
        recomputed += rec;
        p.mean_makespan += r.makespan_s;
        p.mean_energy += r.total_energy_J;
        p.mean_savings += r.projected_savings_J;
        if (first) {
          p.min_recomputed = p.max_recomputed = rec;
          p.min_makespan = p.max_makespan = r.makespan_s;
          p.min_savings = p.max_savings = r.projected_savings_J;
          first = false;
        }
        p.min_recomputed = std::min(p.min_recomputed, rec);
        p.max_recomputed = std::max(p.max_recomputed, rec);
        p.min_makespan = std::min(p.min_makespan, r.makespan_s);
        p.max_makespan = std::max(p.max_makespan, r.makespan_s);
        p.min_savings = std::min(p.min_savings, r.projected_savings_J);
        p.max_savings = std::max(p.max_savings, r.projected_savings_J);
      }
      if (p.runs == 0) continue;
      const auto k = static_cast<double>(p.runs);
      p.mean_failures = failures / k;
      p.mean_recomputed = recomputed / k;
      p.recomputed_per_failure = failures > 0 ? recomputed / failures : 0.0;
      p.mean_makespan /= k;
      p.mean_energy /= k;
      p.mean_savings /= k;
      xs.push_back(static_cast<double>(n));
      ys.push_back(p.mean_savings);
      report.points.push_back(p);
    }
    if (s != StrategyKind::Global && xs.size() >= 3) {
      report.fits.push_back({s, stats::polyfit(xs, ys, 1), stats::polyfit(xs, ys, 2)});
    }
  }
  return report;
}

inline void write_sweep_csv(std::ostream& out, const RunConfig& cfg, const SweepReport& report,
                            std::string_view generated_at) {
  write_metadata(out, "dfr-sweep", kSweepSchemaVersion, cfg, generated_at);
  out << "strategy,n,runs,mean_failures,mean_recomputed,min_recomputed,max_recomputed,recomputed_per_failure,"
         "mean_makespan_s,min_makespan_s,max_makespan_s,mean_energy_J,mean_savings_J,min_savings_J,max_savings_J\n";
  for (const auto& p : report.points) {
    out << to_string(p.strategy) << "," << p.n << "," << p.runs << "," << fmt_double(p.mean_failures) << ","
        << fmt_double(p.mean_recomputed) << "," << fmt_double(p.min_recomputed) << "," << fmt_double(p.max_recomputed)
        << "," << fmt_double(p.recomputed_per_failure) << "," << fmt_double(p.mean_makespan) << ","
        << fmt_double(p.min_makespan) << "," << fmt_double(p.max_makespan) << "," << fmt_double(p.mean_energy) << ","
        << fmt_double(p.mean_savings) << "," << fmt_double(p.min_savings) << "," << fmt_double(p.max_savings) << "\n";
  }
}

inline nlohmann::json fit_json(const stats::PolyFit& f) {
  return {{"degree", f.degree}, {"coefficients", f.coeffs}, {"rss", f.rss}, {"r2", f.r2}};
}

inline nlohmann::json fit_report_json(const RunConfig& cfg, const SweepReport& report) {
  nlohmann::json j;
  j["schema"] = "dfr-fit";
  j["schema_version"] = kSweepSchemaVersion;
  j["config_hash"] = config_hash(cfg);
  j["x"] = "n";
  j["y"] = "mean projected_savings_J";
  j["coefficient_order"] = "ascending powers of n";
  nlohmann::json fits = nlohmann::json::array();
  for (const auto& f : report.fits) {
    fits.push_back({{"strategy", std::string(to_string(f.strategy))},
                    {"degree1", fit_json(f.linear)},
                    {"degree2", fit_json(f.quadratic)}});
  }
  j["fits"] = fits;
  return j;
}

}  // namespace dfr::exp
