#pragma once

// Independent reference computations used by unit and acceptance tests.
// Nothing here calls the planners or closed forms under test.

#include <cstdint>
#include <cstdlib>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dfr/strategies.hpp"

namespace oracle {

/// Tasks reachable backwards from (j, failed_iter - 1) down to last_ckpt + 1
/// on a line of n processes: the data that must be regenerated.
inline std::set<std::pair<std::int64_t, std::int64_t>> backward_cone(std::int64_t n, std::int64_t j,
                                                                       std::int64_t last, std::int64_t failed) {
  std::set<std::pair<std::int64_t, std::int64_t>> cone;  // (iteration, process)
  std::vector<std::pair<std::int64_t, std::int64_t>> stack;
  if (failed - 1 > last) stack.push_back({failed - 1, j});
  while (!stack.empty()) {
    auto [i, p] = stack.back();
    stack.pop_back();
    if (!cone.insert({i, p}).second) continue;
    if (i - 1 <= last) continue;
    for (std::int64_t q = p - 1; q <= p + 1; ++q) {
      if (q >= 0 && q < n) stack.push_back({i - 1, q});
    }
  }
  return cone;
}

/// Replays a plan: a needed value is either checkpoint data (iteration ==
/// last), a recomputed task whose own inputs are obtainable, or, for the
/// log-based strategy, a message a neighbour once sent to the failed process.
/// Survivor memory holds only the latest iteration, so nothing else counts.
/// Returns an empty string when the replacement's state is reproduced.
inline std::string replay_sufficient(const dfr::RecoveryPlan& plan, std::int64_t n) {
  const auto j = plan.failed_process;
  const auto last = plan.last_ckpt_iter;
  std::set<std::pair<std::int64_t, std::int64_t>> recomputed;
  for (const auto& t : plan.recompute) recomputed.insert({t.iteration, t.process});

  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  std::vector<std::pair<std::pair<std::int64_t, std::int64_t>, std::int64_t>> stack;  // (task, consumer)
  if (plan.failed_iter - 1 > last) stack.push_back({{plan.failed_iter - 1, j}, j});
  while (!stack.empty()) {
    auto [task, consumer] = stack.back();
    stack.pop_back();
    auto [i, p] = task;
    if (i <= last) continue;  // checkpoint data
    const bool logged = plan.strategy == dfr::StrategyKind::LogBased && consumer == j && p != j &&
                        std::llabs(p - j) == 1;
    if (!recomputed.count({i, p})) {
      if (logged) continue;
      return "task (" + std::to_string(p) + ", " + std::to_string(i) + ") needed but not recomputed";
    }
    if (!seen.insert(task).second) continue;
    for (std::int64_t q = p - 1; q <= p + 1; ++q) {
      if (q >= 0 && q < n) stack.push_back({{i - 1, q}, p});
    }
  }
  return {};
}

/// |{p : |p - j| < d}| on a line, by counting.
inline std::int64_t count_within(std::int64_t n, std::int64_t j, std::int64_t d) {
  std::int64_t c = 0;
  for (std::int64_t p = 0; p < n; ++p) c += std::llabs(p - j) < d ? 1 : 0;
  return c;
}

}  // namespace oracle
