// dfrsim: resilience simulator, analytic model and Jacobi verifier front end.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error,
// 3 verify-jacobi consistency failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dfr/dfr.hpp"
#include "dfr/experiment.hpp"

namespace fs = std::filesystem;
using namespace dfr;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitVerify = 3;

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw exp::ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through `fn` to a file, or to stdout for "-".
template <typename Fn>
void write_output(const std::string& path, Fn fn) {
  if (path == "-") {
    fn(std::cout);
    return;
  }
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  fn(out);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

struct RunArgs {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string n, iterations, ckpt, mtbf, horizon, seeds, strategies, csv;
  std::optional<std::string> trace_dir;
  bool frequency_scaling = false;
};

void add_run_options(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("-c,--config", a.config_file, "flat key = value configuration file");
  cmd->add_option("--set", a.overrides, "key=value override (repeatable, applied last)");
  cmd->add_option("--n", a.n, "node counts, e.g. 100 or 20,40,80,160");
  cmd->add_option("--iterations", a.iterations, "iterations per run");
  cmd->add_option("--ckpt-interval", a.ckpt, "checkpoint interval in iterations");
  cmd->add_option("--mtbf", a.mtbf, "per-node MTBF with unit suffix s, h or y");
  cmd->add_option("--horizon", a.horizon, "failure-trace horizon (duration or 'auto')");
  cmd->add_option("--seeds", a.seeds, "seed list, e.g. 1..10");
  cmd->add_option("--strategy", a.strategies, "global, dfr-min, dfr-rect, log (comma list), all or every");
  cmd->add_option("--csv", a.csv, "per-run CSV output path ('-' for stdout)");
  cmd->add_option("--trace-dir", a.trace_dir, "directory for per-run JSON traces (empty disables)");
  cmd->add_flag("--frequency-scaling", a.frequency_scaling, "idle hosts drop to the scaled power level");
}

exp::RunConfig resolve(const RunArgs& a) {
  exp::RunConfig cfg;
  if (!a.config_file.empty()) exp::apply_config_text(cfg, read_file(a.config_file), a.config_file);
  const std::pair<const char*, const std::string*> flags[] = {
      {"n", &a.n},         {"iterations", &a.iterations}, {"checkpoint_interval", &a.ckpt},
      {"node_mtbf", &a.mtbf}, {"horizon", &a.horizon},    {"seeds", &a.seeds},
      {"strategies", &a.strategies}, {"csv", &a.csv}};
  for (const auto& [key, value] : flags) {
    if (!value->empty()) exp::set_config_value(cfg, key, *value);
  }
  if (a.frequency_scaling) cfg.frequency_scaling = true;
  if (a.trace_dir) cfg.trace_dir = *a.trace_dir;
  for (const auto& o : a.overrides) exp::apply_override(cfg, o);
  cfg.validate();
  return cfg;
}

std::vector<exp::ResultRow> run_and_record(const exp::RunConfig& cfg, const std::string& stamp) {
  if (!cfg.trace_dir.empty()) fs::create_directories(cfg.trace_dir);
  const auto rows = exp::simulate(cfg, [&](const exp::RunOutput& run) {
    if (cfg.trace_dir.empty()) return;
    const auto path = fs::path(cfg.trace_dir) / exp::trace_file_name(run.row);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace '" + path.string() + "'");
    out << exp::trace_json(cfg, run).dump(1) << "\n";
  });
  write_output(cfg.csv, [&](std::ostream& out) { exp::write_results_csv(out, cfg, rows, stamp); });
  return rows;
}

int cmd_simulate(const RunArgs& a) {
  const auto cfg = resolve(a);
  const auto rows = run_and_record(cfg, utc_now());
  if (cfg.csv != "-") {
    std::cout << "wrote " << rows.size() << " rows to " << cfg.csv << " (config " << exp::config_hash(cfg) << ")\n";
  }
  return 0;
}

int cmd_sweep(const RunArgs& a) {
  const auto cfg = resolve(a);
  std::vector<std::int64_t> distinct = cfg.n;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) {
    throw exp::ConfigError("insufficient points for fit: sweep needs >= 3 distinct node counts");
  }
  const auto stamp = utc_now();
  const auto rows = run_and_record(cfg, stamp);
  const auto report = exp::aggregate(rows, cfg.strategies);
  write_output(cfg.sweep_csv, [&](std::ostream& out) { exp::write_sweep_csv(out, cfg, report, stamp); });
  write_output(cfg.fit_report, [&](std::ostream& out) { out << exp::fit_report_json(cfg, report).dump(2) << "\n"; });

  std::cout << "strategy   n      mean_failures  mean_recomputed  recomputed/failure  mean_makespan_s  mean_savings_J\n";
  for (const auto& p : report.points) {
    std::printf("%-9s %-6lld %14.3f %16.2f %19.3f %16.2f %15.1f\n", std::string(to_string(p.strategy)).c_str(),
                static_cast<long long>(p.n), p.mean_failures, p.mean_recomputed, p.recomputed_per_failure,
                p.mean_makespan, p.mean_savings);
  }
  std::fflush(stdout);
  for (const auto& f : report.fits) {
    std::cout << "fit " << to_string(f.strategy) << " savings(n): degree1 rss=" << f.linear.rss
              << " r2=" << f.linear.r2 << " | degree2 rss=" << f.quadratic.rss << " r2=" << f.quadratic.r2
              << " coeffs=[" << f.quadratic.coeffs[0] << ", " << f.quadratic.coeffs[1] << ", "
              << f.quadratic.coeffs[2] << "]\n";
  }
  std::cout << "wrote " << cfg.csv << ", " << cfg.sweep_csv << ", " << cfg.fit_report << "\n";
  return 0;
}

struct ModelArgs {
  std::string n = "10000";
  std::string mu = "50y";
  std::int64_t c_it = 10;
  int dim = 1;
  double delta_power = 10.0;
  double iter_seconds = 4.0;
  std::optional<double> p_idle;
  std::string format = "table";
};

int cmd_model(const ModelArgs& a) {
  if (a.format != "table" && a.format != "csv") throw exp::ConfigError("--format must be table or csv");
  model::ModelParams base;
  base.mu = exp::parse_duration(a.mu);
  base.c_it = a.c_it;
  base.dim = a.dim;
  base.delta_power = a.delta_power;
  base.iter_seconds = a.iter_seconds;
  std::vector<double> ns;
  for (const auto& part : exp::split(a.n, ',')) ns.push_back(exp::parse_number(part, "n"));
  const char* header = "n,mu_s,c_it,dim,p_neigh_c_it,p_active,p_idle,c_e_J,savings_rate_W,e_jacobi_W";
  if (a.format == "csv") {
    std::cout << header << "\n";
  } else {
    std::printf("%12s %14s %5s %4s %12s %10s %12s %10s %16s %14s\n", "n", "mu_s", "c_it", "dim", "p_neigh(c_it)",
                "p_active", "p_idle", "c_e_J", "savings_rate_W", "e_jacobi_W");
  }
  for (double n : ns) {
    auto p = base;
    p.n = n;
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw exp::ConfigError(e.what());
    }
    const double pn = model::p_neigh(p.c_it, p.dim);
    const double pa = model::p_active(p.c_it, p.dim);
    const double pi = a.p_idle ? *a.p_idle : model::p_idle(p.n, p.c_it, p.dim);
    const double ce = model::c_e(p.delta_power, p.iter_seconds, p.c_it);
    const double rate = model::savings_rate(p.n, p.mu, pi, ce);
    const double ej = model::e_jacobi(p.n, p.mu, p.c_it, p.delta_power, p.iter_seconds);
    if (a.format == "csv") {
      std::cout << exp::fmt_double(n) << "," << exp::fmt_double(p.mu) << "," << p.c_it << "," << p.dim << ","
                << exp::fmt_double(pn) << "," << exp::fmt_double(pa) << "," << exp::fmt_double(pi) << ","
                << exp::fmt_double(ce) << "," << exp::fmt_double(rate) << "," << exp::fmt_double(ej) << "\n";
    } else {
      std::printf("%12.6g %14.6g %5lld %4d %12.6g %10.4f %12.6g %10.4g %16.6g %14.6g\n", n, p.mu,
                  static_cast<long long>(p.c_it), p.dim, pn, pa, pi, ce, rate, ej);
    }
  }
  return 0;
}

struct VerifyArgs {
  std::int64_t rows = 2, cols = 4, local_n = 100, iters = 10, ckpt = 10;
  std::int64_t victim = 1, fail_at = 3;
  std::string strategy = "both";
  std::string json;
  bool frequency_scaling = false;
};

int cmd_verify(const VerifyArgs& a) {
  jacobi::JacobiConfig cfg;
  cfg.grid_rows = a.rows;
  cfg.grid_cols = a.cols;
  cfg.local_n = a.local_n;
  cfg.max_iters = a.iters;
  cfg.checkpoint_interval = a.ckpt;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw exp::ConfigError(e.what());
  }
  std::vector<jacobi::RecoveryKind> kinds;
  if (a.strategy == "both") {
    kinds = {jacobi::RecoveryKind::Global, jacobi::RecoveryKind::Dfr};
  } else if (a.strategy == "global") {
    kinds = {jacobi::RecoveryKind::Global};
  } else if (a.strategy == "dfr" || a.strategy == "dfr-rect") {
    kinds = {jacobi::RecoveryKind::Dfr};
  } else {
    throw exp::ConfigError("--strategy must be global, dfr or both");
  }
  const auto topo = ProcessTopology::cartesian(a.rows, a.cols);
  if (!topo.contains(a.victim)) throw exp::ConfigError("--victim outside the process grid");
  if (a.fail_at < 0 || a.fail_at > a.iters) throw exp::ConfigError("--fail-at must lie in [0, iters]");

  const auto clean = jacobi::run_jacobi(cfg);
  nlohmann::json dump;
  dump["schema"] = "dfr-jacobi-verify";
  dump["schema_version"] = 1;
  dump["config"] = {{"rows", a.rows}, {"cols", a.cols}, {"local_n", a.local_n}, {"iters", a.iters},
                    {"ckpt_interval", a.ckpt}, {"victim", a.victim}, {"fail_at", a.fail_at}};
  dump["fault_free"] = clean.summed_squares;

  bool pass = true;
  std::cout << "iteration fault_free";
  std::vector<jacobi::RunResult> faulty;
  for (auto k : kinds) {
    std::cout << " " << jacobi::to_string(k);
    faulty.push_back(jacobi::run_jacobi(cfg, jacobi::FaultSpec{a.victim, a.fail_at}, k, {a.frequency_scaling}));
  }
  std::cout << "\n";
  for (std::int64_t i = 0; i < a.iters; ++i) {
    std::printf("%9lld %.17g", static_cast<long long>(i), clean.summed_squares[static_cast<std::size_t>(i)]);
    for (const auto& r : faulty) std::printf(" %.17g", r.summed_squares[static_cast<std::size_t>(i)]);
    std::printf("\n");
  }
  std::fflush(stdout);
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    const auto& r = faulty[k];
    const bool same = jacobi::identical(clean, r);
    bool local = true;
    nlohmann::json entry;
    entry["summed_squares"] = r.summed_squares;
    entry["identical_to_fault_free"] = same;
    if (r.recovery) {
      const auto& rep = *r.recovery;
      if (kinds[k] == jacobi::RecoveryKind::Dfr) {
        for (ProcessIndex p = 0; p < topo.size(); ++p) {
          if (partition_distance(topo, a.victim, p) >= std::max<std::int64_t>(rep.offset, 1) &&
              rep.recovery_flops[static_cast<std::size_t>(p)] != 0) {
            local = false;
          }
        }
      }
      std::vector<std::string> states;
      for (auto s : rep.state_during_recovery) states.emplace_back(to_string(s));
      entry["recovery"] = {{"failed_iter", rep.failed_iter},       {"last_ckpt", rep.last_ckpt},
                           {"offset", rep.offset},                 {"rounds", rep.rounds},
                           {"participants", rep.participants},     {"recovery_flops", rep.recovery_flops},
                           {"recomputed_rank_iterations", rep.recomputed_rank_iterations},
                           {"state_during_recovery", states}};
      std::cout << jacobi::to_string(kinds[k]) << ": last_ckpt=" << rep.last_ckpt << " d=" << rep.offset
                << " rounds=" << rep.rounds << " recomputed_rank_iterations=" << rep.recomputed_rank_iterations
                << " participants=";
      for (std::size_t q = 0; q < rep.participants.size(); ++q) std::cout << (q ? "," : "") << rep.participants[q];
      std::cout << "\n";
    } else {
      std::cout << jacobi::to_string(kinds[k]) << ": no failure occurred within the run\n";
    }
    entry["locality_ok"] = local;
    dump[std::string(jacobi::to_string(kinds[k]))] = entry;
    std::cout << jacobi::to_string(kinds[k]) << " consistency: " << (same && local ? "PASS" : "FAIL") << "\n";
    pass = pass && same && local;
  }
  if (!a.json.empty()) write_output(a.json, [&](std::ostream& out) { out << dump.dump(2) << "\n"; });
  std::cout << "verdict: " << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? 0 : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-flow rollback resilience simulator"};
  app.require_subcommand(1);

  RunArgs sim_args, sweep_args;
  auto* sim = app.add_subcommand("simulate", "run every (strategy, n, seed) combination");
  add_run_options(sim, sim_args);
  auto* sweep = app.add_subcommand("sweep", "simulate over >= 3 node counts, aggregate and fit");
  add_run_options(sweep, sweep_args);

  ModelArgs model_args;
  auto* mdl = app.add_subcommand("model", "evaluate the analytic savings model");
  mdl->add_option("--n", model_args.n, "process count(s), comma separated");
  mdl->add_option("--mu", model_args.mu, "per-node MTBF with unit suffix s, h or y");
  mdl->add_option("--c-it", model_args.c_it, "checkpoint interval in iterations");
  mdl->add_option("--dim", model_args.dim, "stencil dimensionality (1 or 2)");
  mdl->add_option("--delta-power", model_args.delta_power, "W saved per idle host");
  mdl->add_option("--iter-seconds", model_args.iter_seconds, "seconds per iteration");
  mdl->add_option("--p-idle", model_args.p_idle, "override the idle-process count");
  mdl->add_option("--format", model_args.format, "table or csv");

  VerifyArgs v;
  auto* ver = app.add_subcommand("verify-jacobi", "check fault-free, global and DFR Jacobi runs agree bit-exactly");
  ver->add_option("--rows", v.rows);
  ver->add_option("--cols", v.cols);
  ver->add_option("--local-n", v.local_n);
  ver->add_option("--iters", v.iters);
  ver->add_option("--ckpt-interval", v.ckpt);
  ver->add_option("--victim", v.victim);
  ver->add_option("--fail-at", v.fail_at);
  ver->add_option("--strategy", v.strategy, "global, dfr or both");
  ver->add_option("--json", v.json, "write histories and recovery details as JSON");
  ver->add_flag("--frequency-scaling", v.frequency_scaling);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(sim_args);
    if (*sweep) return cmd_sweep(sweep_args);
    if (*mdl) return cmd_model(model_args);
    if (*ver) return cmd_verify(v);
  } catch (const exp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
