#pragma once

// Unrolled data-flow graph of an iterative stencil and process-grid
// distance queries.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dfr {

using ProcessIndex = std::int64_t;
using Iteration = std::int64_t;

enum class TopologyKind { Line1D, Cartesian2D };

/// Process grid. Line1D is non-periodic; Cartesian2D maps rank r to
/// (row = r mod rows, col = r div rows), so checkpoint buddies (2k, 2k+1)
/// share a column whenever rows is even.
class ProcessTopology {
 public:
  static ProcessTopology line(std::int64_t n) { return ProcessTopology(TopologyKind::Line1D, n, 1); }
  static ProcessTopology cartesian(std::int64_t rows, std::int64_t cols) {
    return ProcessTopology(TopologyKind::Cartesian2D, rows, cols);
  }

  TopologyKind kind() const { return kind_; }
  std::int64_t rows() const { return rows_; }
  std::int64_t cols() const { return cols_; }
  std::int64_t size() const { return rows_ * cols_; }

  struct Coord {
    std::int64_t row;
    std::int64_t col;
    friend bool operator==(const Coord&, const Coord&) = default;
  };

  Coord coords(ProcessIndex r) const {
    check(r);
    if (kind_ == TopologyKind::Line1D) return {0, r};
    return {r % rows_, r / rows_};
  }

  ProcessIndex rank_at(std::int64_t row, std::int64_t col) const {
    if (kind_ == TopologyKind::Line1D) return col;
    return col * rows_ + row;
  }

  bool contains(ProcessIndex r) const { return r >= 0 && r < size(); }

  void check(ProcessIndex r) const {
    if (!contains(r)) {
      throw std::out_of_range("process index " + std::to_string(r) + " outside topology of " +
                              std::to_string(size()) + " processes");
    }
  }

 private:
  ProcessTopology(TopologyKind kind, std::int64_t a, std::int64_t b) : kind_(kind) {
    if (a < 1 || b < 1) throw std::invalid_argument("topology extents must be >= 1");
    if (kind == TopologyKind::Line1D) {
      rows_ = 1;
      cols_ = a;
    } else {
      rows_ = a;
      cols_ = b;
    }
  }

  TopologyKind kind_;
  std::int64_t rows_ = 1;
  std::int64_t cols_ = 1;
};

/// |a - b| on a line, Manhattan distance on a Cartesian grid.
inline std::int64_t partition_distance(const ProcessTopology& topo, ProcessIndex a, ProcessIndex b) {
  const auto ca = topo.coords(a);
  const auto cb = topo.coords(b);
  return std::abs(ca.row - cb.row) + std::abs(ca.col - cb.col);
}

/// Radius-1 neighbours (2 on a line, up to 4 on a grid), ascending.
inline std::vector<ProcessIndex> neighbours(const ProcessTopology& topo, ProcessIndex j) {
  const auto c = topo.coords(j);
  std::vector<ProcessIndex> out;
  constexpr std::pair<int, int> kSteps[] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
  for (auto [dr, dc] : kSteps) {
    const auto r = c.row + dr;
    const auto col = c.col + dc;
    if (r < 0 || r >= topo.rows() || col < 0 || col >= topo.cols()) continue;
    out.push_back(topo.rank_at(r, col));
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct TaskId {
  ProcessIndex process = 0;
  Iteration iteration = 0;

  friend bool operator==(const TaskId&, const TaskId&) = default;
  friend auto operator<=>(const TaskId& a, const TaskId& b) {
    if (auto c = a.iteration <=> b.iteration; c != 0) return c;
    return a.process <=> b.process;
  }
};

enum class TaskState { Pending, Running, Done, Discarded };

struct TaskNode {
  TaskId id;
  double flops = 0.0;
  std::vector<TaskId> inputs;
  TaskState state = TaskState::Pending;
  // Number of times this logical task has completed; generation - 1 recomputes.
  std::int64_t generation = 0;
};

class TaskGraph {
 public:
  TaskGraph(ProcessTopology topology, Iteration iterations, Iteration checkpoint_interval,
            std::vector<TaskNode> nodes)
      : topology_(topology),
        iterations_(iterations),
        checkpoint_interval_(checkpoint_interval),
        nodes_(std::move(nodes)) {}

  const ProcessTopology& topology() const { return topology_; }
  std::int64_t processes() const { return topology_.size(); }
  Iteration iterations() const { return iterations_; }
  Iteration checkpoint_interval() const { return checkpoint_interval_; }
  std::size_t size() const { return nodes_.size(); }

  bool contains(TaskId id) const {
    return topology_.contains(id.process) && id.iteration >= 0 && id.iteration < iterations_;
  }

  std::size_t index(TaskId id) const {
    if (!contains(id)) throw std::out_of_range("task outside graph");
    return static_cast<std::size_t>(id.iteration * processes() + id.process);
  }

  const TaskNode& node(TaskId id) const { return nodes_[index(id)]; }
  TaskNode& node(TaskId id) { return nodes_[index(id)]; }
  const std::vector<TaskNode>& nodes() const { return nodes_; }
  std::vector<TaskNode>& nodes() { return nodes_; }

 private:
  ProcessTopology topology_;
  Iteration iterations_;
  Iteration checkpoint_interval_;
  std::vector<TaskNode> nodes_;
};

/// Builds the n x iterations DAG with 3-point stencil edges (i-1 -> i).
/// Only 1D topologies can be simulated.
inline TaskGraph build_task_graph(const ProcessTopology& topology, Iteration iterations,
                                  Iteration checkpoint_interval, double flops_per_task) {
  if (topology.kind() != TopologyKind::Line1D) {
    throw std::invalid_argument("unsupported dimensionality for simulation: only Line1D topologies");
  }
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (checkpoint_interval < 1) throw std::invalid_argument("checkpoint interval must be >= 1");
  if (flops_per_task < 0) throw std::invalid_argument("flops per task must be >= 0");

  const auto n = topology.size();
  std::vector<TaskNode> nodes;
  nodes.reserve(static_cast<std::size_t>(n * iterations));
  for (Iteration i = 0; i < iterations; ++i) {
    for (ProcessIndex j = 0; j < n; ++j) {
      TaskNode node;
      node.id = {j, i};
      node.flops = flops_per_task;
      if (i > 0) {
        for (ProcessIndex p = std::max<ProcessIndex>(0, j - 1); p <= std::min(n - 1, j + 1); ++p) {
          node.inputs.push_back({p, i - 1});
        }
      }
      nodes.push_back(std::move(node));
    }
  }
  return TaskGraph(topology, iterations, checkpoint_interval, std::move(nodes));
}

}  // namespace dfr
