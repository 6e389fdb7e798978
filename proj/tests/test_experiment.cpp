#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "dfr/experiment.hpp"
#include "dfr/stats.hpp"

using namespace dfr;
using namespace dfr::exp;

namespace {

RunConfig small_run() {
  RunConfig cfg;
  cfg.n = {12};
  cfg.iterations = 40;
  cfg.node_mtbf = 2000;
  cfg.seeds = {1, 2, 3};
  return cfg;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Config, DefaultsAreTheFullScaleSetup) {
  RunConfig cfg;
  EXPECT_EQ(cfg.n, (std::vector<std::int64_t>{100}));
  EXPECT_EQ(cfg.iterations, 1000);
  EXPECT_EQ(cfg.checkpoint_interval, 6);
  EXPECT_DOUBLE_EQ(cfg.node_mtbf, 360000.0);
  EXPECT_EQ(cfg.seeds.size(), 10u);
  EXPECT_DOUBLE_EQ(cfg.resolved_horizon(), 10000.0);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, DurationsAcceptUnits) {
  EXPECT_DOUBLE_EQ(parse_duration("64000s"), 64000.0);
  EXPECT_DOUBLE_EQ(parse_duration("100h"), 360000.0);
  EXPECT_DOUBLE_EQ(parse_duration("2.5"), 2.5);
  EXPECT_DOUBLE_EQ(parse_duration("1y"), 365.0 * 24 * 3600);
  EXPECT_THROW(parse_duration("10m"), ConfigError);
  EXPECT_THROW(parse_duration("-3s"), ConfigError);
  EXPECT_THROW(parse_duration(""), ConfigError);
}

TEST(Config, IntegerListsAndRanges) {
  EXPECT_EQ(parse_int_list("1..4,9", "x"), (std::vector<std::int64_t>{1, 2, 3, 4, 9}));
  EXPECT_EQ(parse_int_list(" 7 ", "x"), (std::vector<std::int64_t>{7}));
  EXPECT_THROW(parse_int_list("5..2", "x"), ConfigError);
  EXPECT_THROW(parse_int_list("1,,2", "x"), ConfigError);
  EXPECT_THROW(parse_int_list("1.5", "x"), ConfigError);
}

TEST(Config, FileTextWithComments) {
  RunConfig cfg;
  apply_config_text(cfg,
                    "# weak scaling\n"
                    "n = 20,40,80,160\n"
                    "iterations = 200   # short\n"
                    "node_mtbf = 64000s\n"
                    "strategies = every\n"
                    "\n");
  EXPECT_EQ(cfg.n, (std::vector<std::int64_t>{20, 40, 80, 160}));
  EXPECT_EQ(cfg.iterations, 200);
  EXPECT_DOUBLE_EQ(cfg.node_mtbf, 64000.0);
  EXPECT_EQ(cfg.strategies.size(), 4u);
}

TEST(Config, UnknownKeyIsRejectedWithLocation) {
  RunConfig cfg;
  try {
    apply_config_text(cfg, "n = 5\nmtbf = 3h\n", "desk.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("desk.cfg:2"), std::string::npos) << what;
    EXPECT_NE(what.find("mtbf"), std::string::npos) << what;
  }
  EXPECT_THROW(apply_config_text(cfg, "just words\n"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "iterations"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "strategies=restart"), ConfigError);
}

TEST(Config, OverridesReplaceFileValues) {
  RunConfig cfg;
  apply_config_text(cfg, "iterations = 200\nseeds = 1..10\n");
  apply_override(cfg, "iterations=50");
  apply_override(cfg, "seeds = 3");
  EXPECT_EQ(cfg.iterations, 50);
  EXPECT_EQ(cfg.seeds, (std::vector<std::int64_t>{3}));
}

TEST(Config, StrategyAliases) {
  EXPECT_EQ(parse_strategies("all"),
            (std::vector<StrategyKind>{StrategyKind::Global, StrategyKind::DfrMinimal, StrategyKind::LogBased}));
  EXPECT_EQ(parse_strategies("log,dfr-min,log"),
            (std::vector<StrategyKind>{StrategyKind::LogBased, StrategyKind::DfrMinimal}));
}

TEST(Config, ValidationCatchesBadValues) {
  RunConfig cfg;
  cfg.n = {0};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.checkpoint_interval = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.seeds.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.platform.host.flops_rate = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, HashCoversResultsButNotOutputPaths) {
  RunConfig a;
  RunConfig b;
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b.csv = "elsewhere.csv";
  b.trace_dir = "";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.checkpoint_interval = 7;
  EXPECT_NE(config_hash(a), config_hash(b));
  RunConfig c;
  c.frequency_scaling = true;
  EXPECT_NE(config_hash(a), config_hash(c));
}

TEST(Config, CanonicalRoundTrip) {
  RunConfig a = small_run();
  a.horizon = 1234.5;
  a.platform.model_reload_traffic = false;
  std::string text;
  for (const auto& line : canonical_config(a)) text += line + "\n";
  RunConfig b;
  apply_config_text(b, text);
  EXPECT_EQ(canonical_config(a), canonical_config(b));
  EXPECT_EQ(config_hash(a), config_hash(b));
}

TEST(Results, HeaderAndColumnsAreStable) {
  EXPECT_EQ(kResultColumns,
            "strategy,n,seed,failures_fired,recomputed_tasks,makespan_s,total_energy_J,projected_savings_J,config_hash");
  auto cfg = small_run();
  const auto rows = simulate(cfg);
  std::ostringstream out;
  write_results_csv(out, cfg, rows, "2026-01-01T00:00:00Z");
  const auto lines = lines_of(out.str());
  ASSERT_GT(lines.size(), 3u);
  EXPECT_EQ(lines[0], "# schema: dfr-results v1");
  EXPECT_EQ(lines[1].rfind("# prng: ", 0), 0u);
  EXPECT_EQ(lines[2], "# config_hash: " + config_hash(cfg));
  std::size_t header = 0;
  while (header < lines.size() && lines[header][0] == '#') ++header;
  EXPECT_EQ(lines[header - 1], "# generated_at: 2026-01-01T00:00:00Z");
  EXPECT_EQ(lines[header], kResultColumns);
  EXPECT_EQ(lines.size() - header - 1, rows.size());
  for (std::size_t i = header + 1; i < lines.size(); ++i) EXPECT_EQ(split(lines[i], ',').size(), 9u) << lines[i];
}

TEST(Results, OneRowPerStrategyAndSeed) {
  auto cfg = small_run();
  cfg.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto rows = simulate(cfg);
  ASSERT_EQ(rows.size(), 30u);
  std::set<std::pair<std::int64_t, StrategyKind>> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].strategy, cfg.strategies[i % 3]);
    EXPECT_EQ(rows[i].seed, cfg.seeds[i / 3]);
    seen.insert({rows[i].seed, rows[i].strategy});
  }
  EXPECT_EQ(seen.size(), 30u);
}

TEST(Results, StrategiesShareTheTraceAndSavingsReferenceGlobal) {
  auto cfg = small_run();
  cfg.strategies = {StrategyKind::LogBased, StrategyKind::DfrMinimal};
  const auto rows = simulate(cfg);
  auto global_cfg = cfg;
  global_cfg.strategies = {StrategyKind::Global};
  const auto global = simulate(global_cfg);
  ASSERT_EQ(rows.size(), 6u);
  ASSERT_EQ(global.size(), 3u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& g = global[i / 2];
    EXPECT_EQ(rows[i].failures_fired, g.failures_fired);
    EXPECT_DOUBLE_EQ(rows[i].projected_savings_J,
                     static_cast<double>(g.recomputed_tasks - rows[i].recomputed_tasks) * cfg.joules_per_task);
  }
  for (const auto& g : global) EXPECT_EQ(g.projected_savings_J, 0.0);
}

TEST(Results, SameConfigSameRows) {
  auto cfg = small_run();
  cfg.n = {8, 15};
  EXPECT_EQ(simulate(cfg), simulate(cfg));
}

TEST(Results, ObserverSeesEveryRun) {
  auto cfg = small_run();
  std::size_t calls = 0;
  const auto rows = simulate(cfg, [&](const RunOutput& run) {
    ASSERT_NE(run.result, nullptr);
    ASSERT_NE(run.trace, nullptr);
    const auto j = trace_json(cfg, run);
    EXPECT_EQ(j.at("schema"), "dfr-trace");
    EXPECT_EQ(j.at("schema_version"), kTraceSchemaVersion);
    EXPECT_EQ(j.at("config_hash"), config_hash(cfg));
    EXPECT_EQ(j.at("failure_events").size(), run.trace->events.size());
    ++calls;
  });
  EXPECT_EQ(calls, rows.size());
  EXPECT_EQ(trace_file_name(rows[1]), "run_dfr-min_n12_s1.json");
}

TEST(Sweep, NeedsThreeNodeCounts) {
  auto cfg = small_run();
  cfg.n = {8, 16};
  const auto rows = simulate(cfg);
  EXPECT_THROW(aggregate(rows, cfg.strategies), ConfigError);
}

TEST(Sweep, PointsAndFits) {
  auto cfg = small_run();
  cfg.n = {8, 16, 24, 32};
  const auto rows = simulate(cfg);
  const auto report = aggregate(rows, cfg.strategies);
  EXPECT_EQ(report.points.size(), 12u);
  ASSERT_EQ(report.fits.size(), 2u);
  EXPECT_EQ(report.fits[0].strategy, StrategyKind::DfrMinimal);
  EXPECT_EQ(report.fits[0].linear.coeffs.size(), 2u);
  EXPECT_EQ(report.fits[0].quadratic.coeffs.size(), 3u);
  EXPECT_LE(report.fits[0].quadratic.rss, report.fits[0].linear.rss + 1e-6);
  for (const auto& p : report.points) {
    EXPECT_EQ(p.runs, 3);
    EXPECT_LE(p.min_recomputed, p.mean_recomputed);
    EXPECT_GE(p.max_recomputed, p.mean_recomputed);
  }
  std::ostringstream csv;
  write_sweep_csv(csv, cfg, report, "t");
  const auto lines = lines_of(csv.str());
  EXPECT_EQ(lines[0], "# schema: dfr-sweep v1");
  EXPECT_EQ(lines.back().substr(0, 4), "log,");
  const auto fit = fit_report_json(cfg, report);
  EXPECT_EQ(fit.at("schema"), "dfr-fit");
  EXPECT_EQ(fit.at("fits").size(), 2u);
}

TEST(Stats, PolyfitRecoversExactPolynomials) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double v : x) y.push_back(2.0 - 3.0 * v + 0.5 * v * v);
  const auto q = stats::polyfit(x, y, 2);
  EXPECT_NEAR(q.coeffs[0], 2.0, 1e-10);
  EXPECT_NEAR(q.coeffs[1], -3.0, 1e-10);
  EXPECT_NEAR(q.coeffs[2], 0.5, 1e-10);
  EXPECT_NEAR(q.rss, 0.0, 1e-18);
  EXPECT_NEAR(q.r2, 1.0, 1e-12);
  const auto l = stats::polyfit(x, y, 1);
  // Degree one must agree with the closed-form least-squares line.
  double mx = 3, my = 0;
  for (double v : y) my += v / 5;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  EXPECT_NEAR(l.coeffs[1], sxy / sxx, 1e-12);
  EXPECT_NEAR(l.coeffs[0], my - sxy / sxx * mx, 1e-12);
  EXPECT_GT(l.rss, 0.0);
  EXPECT_THROW(stats::polyfit({1, 2}, {1, 2}, 2), std::invalid_argument);
}

TEST(Stats, SlopeTestAgainstHandComputedValues) {
  // y = 1 + 2x with residuals +0.1, -0.1, -0.1, +0.1 at x = 0..3.
  const std::vector<double> x{0, 1, 2, 3};
  const std::vector<double> y{1.1, 2.9, 4.9, 7.1};
  const auto t = stats::slope_test(x, y);
  EXPECT_NEAR(t.slope, 2.0, 1e-12);
  EXPECT_NEAR(t.intercept, 1.0, 1e-12);
  EXPECT_EQ(t.dof, 2.0);
  // rss = 0.04, sxx = 5 -> se = sqrt(0.04 / 2 / 5) = sqrt(0.004)
  EXPECT_NEAR(t.std_error, std::sqrt(0.004), 1e-12);
  EXPECT_NEAR(t.t, 2.0 / std::sqrt(0.004), 1e-9);
  // Two-sided p for |t| = 31.62 on 2 dof: 2 * (1/2 - t / (2 sqrt(2 + t^2))).
  const double tt = t.t;
  EXPECT_NEAR(t.p_value, 1.0 - tt / std::sqrt(2.0 + tt * tt), 1e-12);

  const auto flat = stats::slope_test({1, 2, 3, 4}, {5, 5, 5, 5});
  EXPECT_EQ(flat.slope, 0.0);
  EXPECT_EQ(flat.p_value, 1.0);
  EXPECT_THROW(stats::slope_test({1, 2}, {1, 2}), std::invalid_argument);
}
