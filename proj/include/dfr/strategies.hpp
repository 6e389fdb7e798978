#pragma once

// Rollback planners. Given the failed process j, the recovery offset
// d = failed_iter - last_ckpt_iter and the topology, each planner returns the
// tasks to recompute, the processes that take part, and the ones left idle.
// Planners are pure functions.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dfr/task_graph.hpp"

namespace dfr {

enum class StrategyKind { Global, DfrMinimal, DfrRectangular, LogBased };

inline std::string_view to_string(StrategyKind s) {
  switch (s) {
    case StrategyKind::Global: return "global";
    case StrategyKind::DfrMinimal: return "dfr-min";
    case StrategyKind::DfrRectangular: return "dfr-rect";
    case StrategyKind::LogBased: return "log";
  }
  return "?";
}

inline StrategyKind parse_strategy(std::string_view s) {
  if (s == "global") return StrategyKind::Global;
  if (s == "dfr-min" || s == "dfr") return StrategyKind::DfrMinimal;
  if (s == "dfr-rect") return StrategyKind::DfrRectangular;
  if (s == "log" || s == "log-based") return StrategyKind::LogBased;
  throw std::invalid_argument("unknown strategy '" + std::string(s) + "' (expected global, dfr-min, dfr-rect, log)");
}

inline constexpr StrategyKind kAllStrategies[] = {StrategyKind::Global, StrategyKind::DfrRectangular,
                                                  StrategyKind::DfrMinimal, StrategyKind::LogBased};

struct RecoveryPlan {
  StrategyKind strategy = StrategyKind::Global;
  ProcessIndex failed_process = 0;
  Iteration last_ckpt_iter = 0;
  Iteration failed_iter = 0;
  std::vector<TaskId> recompute;          // sorted by (iteration, process)
  std::vector<ProcessIndex> participants; // read checkpoints, recompute, or both
  std::vector<ProcessIndex> idle;
  Iteration rejoin_iteration = 0;

  Iteration offset() const { return failed_iter - last_ckpt_iter; }
};

namespace detail {

inline RecoveryPlan base_plan(StrategyKind s, ProcessIndex j, Iteration d, Iteration last_ckpt) {
  if (d < 0) throw std::invalid_argument("recovery offset d must be >= 0");
  if (last_ckpt < 0) throw std::invalid_argument("last checkpoint iteration must be >= 0");
  RecoveryPlan plan;
  plan.strategy = s;
  plan.failed_process = j;
  plan.last_ckpt_iter = last_ckpt;
  plan.failed_iter = last_ckpt + d;
  plan.rejoin_iteration = plan.failed_iter;
  return plan;
}

inline void fill_idle(RecoveryPlan& plan, std::int64_t n) {
  std::vector<bool> in(static_cast<std::size_t>(n), false);
  for (auto p : plan.participants) in[static_cast<std::size_t>(p)] = true;
  for (ProcessIndex p = 0; p < n; ++p) {
    if (!in[static_cast<std::size_t>(p)]) plan.idle.push_back(p);
  }
}

inline void require_line(const ProcessTopology& topo) {
  if (topo.kind() != TopologyKind::Line1D) {
    throw std::invalid_argument("rollback planners support Line1D topologies only");
  }
}

}  // namespace detail

/// Every process reloads and recomputes iterations last_ckpt+1 .. failed_iter-1.
inline RecoveryPlan plan_global(ProcessIndex j, Iteration d, std::int64_t n, Iteration last_ckpt) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (j < 0 || j >= n) throw std::out_of_range("failed process outside topology");
  auto plan = detail::base_plan(StrategyKind::Global, j, d, last_ckpt);
  for (Iteration i = last_ckpt + 1; i < plan.failed_iter; ++i) {
    for (ProcessIndex p = 0; p < n; ++p) plan.recompute.push_back({p, i});
  }
  for (ProcessIndex p = 0; p < n; ++p) plan.participants.push_back(p);
  return plan;
}

/// Data-flow rollback on a line. Rectangular keeps every process within
/// distance < d busy for all d-1 recovery iterations; Minimal recomputes the
/// shrinking dependency cone only. In both variants every process within
/// distance < d reads its checkpoint, so the participant sets coincide.
inline RecoveryPlan plan_dfr(ProcessIndex j, Iteration d, const ProcessTopology& topo, Iteration last_ckpt,
                             StrategyKind variant) {
  detail::require_line(topo);
  topo.check(j);
  if (variant != StrategyKind::DfrMinimal && variant != StrategyKind::DfrRectangular) {
    throw std::invalid_argument("plan_dfr needs a DFR variant");
  }
  const auto n = topo.size();
  auto plan = detail::base_plan(variant, j, d, last_ckpt);
  const Iteration reach = std::max<Iteration>(d - 1, 0);
  for (ProcessIndex p = std::max<ProcessIndex>(0, j - reach); p <= std::min(n - 1, j + reach); ++p) {
    plan.participants.push_back(p);
  }
  for (Iteration m = 1; m < d; ++m) {
    const Iteration radius = variant == StrategyKind::DfrRectangular ? d - 1 : d - 1 - m;
    for (ProcessIndex p = std::max<ProcessIndex>(0, j - radius); p <= std::min(n - 1, j + radius); ++p) {
      plan.recompute.push_back({p, last_ckpt + m});
    }
  }
  detail::fill_idle(plan, n);
  return plan;
}

/// Replacement replays its own lost iterations; neighbour inputs come from
/// message logs, so no survivor recomputes.
inline RecoveryPlan plan_logbased(ProcessIndex j, Iteration d, const ProcessTopology& topo, Iteration last_ckpt) {
  topo.check(j);
  auto plan = detail::base_plan(StrategyKind::LogBased, j, d, last_ckpt);
  for (Iteration i = last_ckpt + 1; i < plan.failed_iter; ++i) plan.recompute.push_back({j, i});
  plan.participants.push_back(j);
  detail::fill_idle(plan, topo.size());
  return plan;
}

inline RecoveryPlan make_plan(StrategyKind s, ProcessIndex j, Iteration d, const ProcessTopology& topo,
                              Iteration last_ckpt) {
  switch (s) {
    case StrategyKind::Global: {
      topo.check(j);
      auto plan = plan_global(j, d, topo.size(), last_ckpt);
      return plan;
    }
    case StrategyKind::DfrMinimal:
    case StrategyKind::DfrRectangular: return plan_dfr(j, d, topo, last_ckpt, s);
    case StrategyKind::LogBased: return plan_logbased(j, d, topo, last_ckpt);
  }
  throw std::invalid_argument("unknown strategy");
}

/// Closed-form |plan.recompute| with boundary clipping on a line of n.
inline std::int64_t recompute_count_closed_form(StrategyKind s, std::int64_t n, Iteration d, ProcessIndex j) {
  if (d <= 1) return 0;
  const auto window = [&](std::int64_t radius) {
    return std::min(n - 1, j + radius) - std::max<std::int64_t>(0, j - radius) + 1;
  };
  switch (s) {
    case StrategyKind::Global: return n * (d - 1);
    case StrategyKind::DfrRectangular: return (d - 1) * window(d - 1);
    case StrategyKind::DfrMinimal: {
      std::int64_t total = 0;
      for (std::int64_t r = 0; r <= d - 2; ++r) total += window(r);
      return total;
    }
    case StrategyKind::LogBased: return d - 1;
  }
  return 0;
}

/// Structural checks the engine applies before acting on a plan.
inline void validate_plan(const RecoveryPlan& plan, const TaskGraph& graph) {
  const auto n = graph.processes();
  auto fail = [](const std::string& msg) { throw std::logic_error("invalid recovery plan: " + msg); };
  for (const auto& t : plan.recompute) {
    if (!graph.contains(t)) fail("task outside graph");
    if (t.iteration <= plan.last_ckpt_iter || t.iteration >= plan.failed_iter) {
      fail("task iteration outside (last_ckpt_iter, failed_iter)");
    }
  }
  if (!std::is_sorted(plan.recompute.begin(), plan.recompute.end())) fail("recompute set not sorted");
  if (std::adjacent_find(plan.recompute.begin(), plan.recompute.end()) != plan.recompute.end()) {
    fail("duplicate task");
  }
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (auto p : plan.participants) {
    if (p < 0 || p >= n) fail("participant out of range");
    seen[static_cast<std::size_t>(p)] |= 1;
  }
  for (auto p : plan.idle) {
    if (p < 0 || p >= n) fail("idle process out of range");
    if (seen[static_cast<std::size_t>(p)] & 1) fail("process both participant and idle");
    seen[static_cast<std::size_t>(p)] |= 2;
  }
  if (!(seen[static_cast<std::size_t>(plan.failed_process)] & 1)) fail("replacement not a participant");
  for (const auto& t : plan.recompute) {
    if (!(seen[static_cast<std::size_t>(t.process)] & 1)) fail("recomputing process not a participant");
  }
  for (Iteration i = plan.last_ckpt_iter + 1; i < plan.failed_iter; ++i) {
    if (!std::binary_search(plan.recompute.begin(), plan.recompute.end(), TaskId{plan.failed_process, i})) {
      fail("replacement does not recompute its lost iteration " + std::to_string(i));
    }
  }
  if (plan.rejoin_iteration != plan.failed_iter) fail("rejoin iteration must equal failed iteration");
}

}  // namespace dfr
