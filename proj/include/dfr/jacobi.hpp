#pragma once

// Application-level check of data-flow rollback on a 2D Jacobi solver.
//
// Ranks are in-process actors on a Cartesian grid (column-major rank map)
// driven in lock-step supersteps that follow the loop order
//   exchange ghosts (om) -> checkpoint -> update nm from om -> allreduce -> swap.
// Messages travel through per-edge FIFO mailboxes. A dead rank neither sends
// nor receives; touching it poisons the communicator, and every rank takes
// the error path at the allreduce. Committed state lives only in om, so the
// half-finished nm of survivors is simply dropped.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dfr/platform.hpp"
#include "dfr/strategies.hpp"
#include "dfr/task_graph.hpp"

namespace dfr::jacobi {

using Field = std::function<double(double x, double y)>;

struct JacobiConfig {
  std::int64_t grid_rows = 2;
  std::int64_t grid_cols = 4;
  std::int64_t local_n = 100;
  double h = 0.0;  // 0 picks 1 / (global extent + 1) along the longer side
  Field source = [](double x, double y) { return std::sin(3.0 * x) * std::cos(2.0 * y) - 1.0; };
  Field boundary = [](double x, double y) { return 1.0 + x - 0.5 * y; };
  Field initial = [](double x, double y) { return 0.25 * x * y; };
  std::int64_t max_iters = 10;
  std::int64_t checkpoint_interval = 10;  // checkpoints after iterations 0, C, 2C, ...
  double residual_tolerance = 0.0;        // <= 0 runs all max_iters

  double spacing() const {
    if (h != 0) return h;
    return 1.0 / static_cast<double>(std::max(grid_rows, grid_cols) * local_n + 1);
  }

  void validate() const {
    if (local_n < 3) throw std::invalid_argument("local_n must be >= 3");
    if (grid_rows < 1 || grid_cols < 1) throw std::invalid_argument("grid extents must be >= 1");
    if (!(spacing() > 0)) throw std::invalid_argument("h must be positive");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (checkpoint_interval < 1) throw std::invalid_argument("checkpoint_interval must be >= 1");
    if (!source || !boundary || !initial) throw std::invalid_argument("fields must be set");
  }
};

/// local_n x local_n owned cells plus a one-cell ghost ring. Writes go through
/// mutable_cells(), which refuses while the grid is frozen.
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::int64_t n) : n_(n), cells_(static_cast<std::size_t>((n + 2) * (n + 2)), 0.0) {}

  std::int64_t n() const { return n_; }
  std::int64_t stride() const { return n_ + 2; }

  // i, j in [-1, n]; -1 and n address ghosts.
  double at(std::int64_t i, std::int64_t j) const { return cells_[offset(i, j)]; }
  std::size_t offset(std::int64_t i, std::int64_t j) const {
    return static_cast<std::size_t>((i + 1) * stride() + (j + 1));
  }

  std::span<const double> cells() const { return cells_; }
  std::span<double> mutable_cells() {
    if (frozen_) throw std::logic_error("write to a frozen grid buffer");
    return cells_;
  }
  void set(std::int64_t i, std::int64_t j, double v) { mutable_cells()[offset(i, j)] = v; }

  void freeze() { frozen_ = true; }
  void thaw() { frozen_ = false; }
  bool frozen() const { return frozen_; }

  bool same_cells(const Grid& other) const { return n_ == other.n_ && cells_ == other.cells_; }
  // Ghost rings hold whatever the last exchange left there; compare owned cells only.
  bool same_owned(const Grid& other) const {
    if (n_ != other.n_) return false;
    for (std::int64_t i = 0; i < n_; ++i) {
      for (std::int64_t j = 0; j < n_; ++j) {
        if (at(i, j) != other.at(i, j)) return false;
      }
    }
    return true;
  }

 private:
  std::int64_t n_ = 0;
  std::vector<double> cells_;
  bool frozen_ = false;
};

enum Direction : int { North = 0, South = 1, West = 2, East = 3 };
inline constexpr std::array<Direction, 4> kDirections = {North, South, West, East};
inline Direction opposite(Direction d) {
  constexpr Direction o[] = {South, North, East, West};
  return o[d];
}

struct Message {
  std::int64_t tag = 0;
  std::vector<double> values;
};

struct EmulatedRank {
  ProcessIndex rank = 0;
  ProcessTopology::Coord coords{};
  std::array<std::optional<ProcessIndex>, 4> neighbour{};
  std::array<std::deque<Message>, 4> inbox{};  // indexed by the direction the sender lies in
  ProcessIndex buddy = 0;
  bool alive = true;
  Grid om;
  Grid nm;
  std::vector<double> source_h2;  // h^2 * f, row-major n x n
  std::int64_t flops = 0;         // arithmetic operations performed so far
};

struct StoredCheckpoint {
  std::int64_t label = -1;  // state after iteration `label`; -1 is the initial state
  ProcessIndex holder = 0;
  Grid data;                // om including the ghosts exchanged for the next iteration
};

/// Interior update of the 5-point Jacobi stencil; returns the sum of squared
/// updates. Ghost cells of `om` must be current. Physical boundary values live
/// in the ghost ring and are never written here.
inline double jacobi_step(const Grid& om, Grid& nm, std::span<const double> source_h2, std::int64_t* flops = nullptr) {
  const auto n = om.n();
  auto out = nm.mutable_cells();
  double residual = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      const double v = 0.25 * (om.at(i - 1, j) + om.at(i, j - 1) + om.at(i + 1, j) + om.at(i, j + 1) -
                               source_h2[static_cast<std::size_t>(i * n + j)]);
      const double diff = v - om.at(i, j);
      residual += diff * diff;
      out[nm.offset(i, j)] = v;
    }
  }
  if (flops) *flops += 8 * n * n;
  return residual;
}

enum class RecoveryKind { Global, Dfr };

inline std::string_view to_string(RecoveryKind k) { return k == RecoveryKind::Global ? "global" : "dfr"; }

struct FaultSpec {
  ProcessIndex victim = 1;
  std::int64_t fail_at_iteration = 3;  // failure at the start of this iteration
};

struct RunOptions {
  bool frequency_scaling_emulated = false;
};

struct RecoveryReport {
  RecoveryKind kind = RecoveryKind::Global;
  ProcessIndex victim = 0;
  std::int64_t failed_iter = 0;
  std::int64_t last_ckpt = -1;
  std::int64_t offset = 0;                   // failed_iter - last_ckpt
  std::int64_t rounds = 0;                   // recovery iterations executed
  std::vector<ProcessIndex> participants;
  std::vector<std::int64_t> recovery_flops;  // per rank, arithmetic during recovery
  std::int64_t recomputed_rank_iterations = 0;
  std::vector<HostState> state_during_recovery;  // per rank, until the post-recovery barrier
  Grid replacement_at_rejoin;                    // victim om at the start of failed_iter
};

struct RunResult {
  std::vector<double> summed_squares;  // per logical iteration
  std::vector<double> residuals;       // allreduced residual per logical iteration
  std::vector<Grid> final_grids;       // om per rank
  std::int64_t iterations_executed = 0;
  std::optional<RecoveryReport> recovery;
};

/// Fixed-order (rank-major, row-major) sum of u^2 over owned cells.
inline double summed_squares(std::span<const Grid> grids) {
  double sum = 0.0;
  for (const auto& g : grids) {
    for (std::int64_t i = 0; i < g.n(); ++i) {
      for (std::int64_t j = 0; j < g.n(); ++j) sum += g.at(i, j) * g.at(i, j);
    }
  }
  return sum;
}

/// All ranks, their mailboxes and the buddy checkpoint store.
class World {
 public:
  explicit World(JacobiConfig config)
      : config_(std::move(config)), topo_(ProcessTopology::cartesian(config_.grid_rows, config_.grid_cols)) {
    config_.validate();
    const auto count = topo_.size();
    ranks_.resize(static_cast<std::size_t>(count));
    for (ProcessIndex r = 0; r < count; ++r) {
      auto& rk = ranks_[static_cast<std::size_t>(r)];
      rk.rank = r;
      rk.coords = topo_.coords(r);
      rk.buddy = count == 1 ? r : ((count % 2 == 1 && r == count - 1) ? count - 2 : (r ^ 1));
      const auto c = rk.coords;
      if (c.row > 0) rk.neighbour[North] = topo_.rank_at(c.row - 1, c.col);
      if (c.row < topo_.rows() - 1) rk.neighbour[South] = topo_.rank_at(c.row + 1, c.col);
      if (c.col > 0) rk.neighbour[West] = topo_.rank_at(c.row, c.col - 1);
      if (c.col < topo_.cols() - 1) rk.neighbour[East] = topo_.rank_at(c.row, c.col + 1);
      init_rank(rk, /*with_initial=*/true);
    }
    // Initial state counts as the checkpoint "after iteration -1".
    exchange(all_ranks(), [](EmulatedRank& rk) -> Grid& { return rk.om; });
    for (auto& rk : ranks_) store_[rk.rank] = StoredCheckpoint{-1, rk.buddy, rk.om};
    committed_label_ = -1;
  }

  const JacobiConfig& config() const { return config_; }
  const ProcessTopology& topology() const { return topo_; }
  std::int64_t size() const { return topo_.size(); }
  EmulatedRank& rank(ProcessIndex r) { return ranks_.at(static_cast<std::size_t>(r)); }
  const EmulatedRank& rank(ProcessIndex r) const { return ranks_.at(static_cast<std::size_t>(r)); }
  std::int64_t committed_checkpoint() const { return committed_label_; }
  const StoredCheckpoint& checkpoint_of(ProcessIndex r) const { return store_.at(r); }

  std::vector<Grid> grids() const {
    std::vector<Grid> out;
    for (const auto& rk : ranks_) out.push_back(rk.om);
    return out;
  }

  double summed_squares_now() const {
    double sum = 0.0;
    for (const auto& rk : ranks_) {
      for (std::int64_t i = 0; i < rk.om.n(); ++i) {
        for (std::int64_t j = 0; j < rk.om.n(); ++j) sum += rk.om.at(i, j) * rk.om.at(i, j);
      }
    }
    return sum;
  }

  /// Fail-stop: the rank's memory is gone. Checkpoints it held for its buddy
  /// stay available to the spare that replaces it.
  void kill(ProcessIndex r) {
    auto& rk = rank(r);
    rk.alive = false;
    rk.om = Grid(config_.local_n);
    rk.nm = Grid(config_.local_n);
    std::fill(rk.om.mutable_cells().begin(), rk.om.mutable_cells().end(), std::numeric_limits<double>::quiet_NaN());
  }

  struct Outcome {
    bool ok = true;
    double residual = 0.0;
  };

  /// One loop iteration k over every rank. On failure detection nothing is
  /// committed: om stays as it was, the staged checkpoint is dropped.
  Outcome iterate(std::int64_t k) {
    poisoned_ = false;
    exchange(all_ranks(), [](EmulatedRank& rk) -> Grid& { return rk.om; });

    std::map<ProcessIndex, StoredCheckpoint> staged;
    const bool ckpt_time = k >= 1 && (k - 1) % config_.checkpoint_interval == 0;
    std::vector<double> local(ranks_.size(), 0.0);
    for (auto& rk : ranks_) {
      if (!rk.alive || detected_[rk.rank]) continue;
      if (ckpt_time) {
        if (!rank(rk.buddy).alive) {
          poisoned_ = true;
          detected_[rk.rank] = true;
          continue;
        }
        staged[rk.rank] = StoredCheckpoint{k - 1, rk.buddy, rk.om};
      }
      local[static_cast<std::size_t>(rk.rank)] = jacobi_step(rk.om, rk.nm, rk.source_h2, &rk.flops);
    }

    // Allreduce: any dead participant surfaces here at the latest.
    bool failed = poisoned_;
    for (const auto& rk : ranks_) failed = failed || !rk.alive;
    clear_detection();
    if (failed) {
      purge_mailboxes();
      return {false, 0.0};
    }
    double global = 0.0;
    for (double v : local) global += v;
    for (auto& rk : ranks_) std::swap(rk.om, rk.nm);
    if (ckpt_time) {
      for (auto& [r, ck] : staged) store_[r] = std::move(ck);
      committed_label_ = k - 1;
    }
    return {true, global};
  }

  /// Brings up a spare for a dead rank; its state is restored by the recovery.
  void respawn(ProcessIndex r) {
    auto& rk = rank(r);
    init_rank(rk, /*with_initial=*/false);
    rk.alive = true;
  }

  /// Every rank reloads its buddy-stored checkpoint. The caller re-executes
  /// iterations committed_checkpoint()+1 onward.
  void global_recover() {
    for (auto& rk : ranks_) {
      if (!rk.alive) throw std::logic_error("global recovery needs every rank alive");
      rk.om = store_.at(rk.rank).data;
    }
  }

  /// Data-flow recovery of `victim`, who failed at the start of `failed_iter`.
  /// Ranks within distance < d run d-1 iterations on duplicates of their
  /// checkpoints over a recovery communicator; ghost cells facing ranks
  /// outside the group keep their checkpointed values. Only the replacement
  /// keeps the result. Survivor om buffers are frozen for the duration.
  std::vector<ProcessIndex> dfr_recover(ProcessIndex victim, std::int64_t failed_iter, std::int64_t* rounds_out = nullptr) {
    if (!rank(victim).alive) throw std::logic_error("replacement must be instantiated before recovery");
    const std::int64_t last = committed_label_;
    const std::int64_t d = failed_iter - last;
    std::vector<ProcessIndex> group;
    for (const auto& rk : ranks_) {
      if (partition_distance(topo_, victim, rk.rank) < std::max<std::int64_t>(d, 1)) group.push_back(rk.rank);
    }

    for (auto& rk : ranks_) {
      if (rk.rank != victim) rk.om.freeze();
    }

    std::map<ProcessIndex, std::pair<Grid, Grid>> dup;
    for (auto r : group) {
      const auto& ck = store_.at(r);
      dup.emplace(r, std::pair<Grid, Grid>{ck.data, ck.data});
    }
    std::int64_t rounds = 0;
    for (std::int64_t m = 1; m < d; ++m, ++rounds) {
      exchange(group, [&](EmulatedRank& rk) -> Grid& { return dup.at(rk.rank).first; });
      for (auto r : group) {
        auto& [old_buf, new_buf] = dup.at(r);
        jacobi_step(old_buf, new_buf, rank(r).source_h2, &rank(r).flops);
        std::swap(old_buf, new_buf);
      }
    }
    rank(victim).om = dup.at(victim).first;  // keep; the others' duplicates are discarded

    for (auto& rk : ranks_) rk.om.thaw();
    if (rounds_out) *rounds_out = rounds;
    return group;
  }

 private:
  void init_rank(EmulatedRank& rk, bool with_initial) {
    const auto n = config_.local_n;
    const double h = config_.spacing();
    rk.om = Grid(n);
    rk.nm = Grid(n);
    rk.source_h2.assign(static_cast<std::size_t>(n * n), 0.0);
    const auto gx = [&](std::int64_t j) { return static_cast<double>(rk.coords.col * n + j + 1) * h; };
    const auto gy = [&](std::int64_t i) { return static_cast<double>(rk.coords.row * n + i + 1) * h; };
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = 0; j < n; ++j) {
        rk.source_h2[static_cast<std::size_t>(i * n + j)] = h * h * config_.source(gx(j), gy(i));
        if (with_initial) rk.om.set(i, j, config_.initial(gx(j), gy(i)));
      }
    }
    // Physical boundary lives in the ghost ring of both buffers.
    for (std::int64_t t = 0; t < n; ++t) {
      for (Grid* g : {&rk.om, &rk.nm}) {
        if (!rk.neighbour[North]) g->set(-1, t, config_.boundary(gx(t), gy(-1)));
        if (!rk.neighbour[South]) g->set(n, t, config_.boundary(gx(t), gy(n)));
        if (!rk.neighbour[West]) g->set(t, -1, config_.boundary(gx(-1), gy(t)));
        if (!rk.neighbour[East]) g->set(t, n, config_.boundary(gx(n), gy(t)));
      }
    }
  }

  std::vector<ProcessIndex> all_ranks() const {
    std::vector<ProcessIndex> out;
    for (const auto& rk : ranks_) out.push_back(rk.rank);
    return out;
  }

  static std::vector<double> edge(const Grid& g, Direction towards) {
    const auto n = g.n();
    std::vector<double> v(static_cast<std::size_t>(n));
    for (std::int64_t t = 0; t < n; ++t) {
      switch (towards) {
        case North: v[static_cast<std::size_t>(t)] = g.at(0, t); break;
        case South: v[static_cast<std::size_t>(t)] = g.at(n - 1, t); break;
        case West: v[static_cast<std::size_t>(t)] = g.at(t, 0); break;
        case East: v[static_cast<std::size_t>(t)] = g.at(t, n - 1); break;
      }
    }
    return v;
  }

  static void write_ghost(Grid& g, Direction from, const std::vector<double>& v) {
    const auto n = g.n();
    for (std::int64_t t = 0; t < n; ++t) {
      const double x = v[static_cast<std::size_t>(t)];
      switch (from) {
        case North: g.set(-1, t, x); break;
        case South: g.set(n, t, x); break;
        case West: g.set(t, -1, x); break;
        case East: g.set(t, n, x); break;
      }
    }
  }

  /// Ghost exchange among `members` (sends, then in-order receives). Partners
  /// outside `members` are skipped: their ghosts stay as they are. A dead
  /// partner inside the set poisons the communicator for the detecting rank.
  template <typename BufferOf>
  void exchange(const std::vector<ProcessIndex>& members, BufferOf buffer_of) {
    std::vector<char> member(ranks_.size(), 0);
    for (auto r : members) member[static_cast<std::size_t>(r)] = 1;
    for (auto r : members) {
      auto& rk = rank(r);
      if (!rk.alive) continue;
      for (auto dir : kDirections) {
        if (!rk.neighbour[dir] || !member[static_cast<std::size_t>(*rk.neighbour[dir])]) continue;
        auto& peer = rank(*rk.neighbour[dir]);
        if (!peer.alive) {
          poisoned_ = true;
          detected_[r] = true;
          continue;
        }
        peer.inbox[opposite(dir)].push_back({tag_, edge(buffer_of(rk), dir)});
      }
    }
    for (auto r : members) {
      auto& rk = rank(r);
      if (!rk.alive) continue;
      for (auto dir : kDirections) {
        if (!rk.neighbour[dir] || !member[static_cast<std::size_t>(*rk.neighbour[dir])]) continue;
        auto& box = rk.inbox[dir];
        if (box.empty()) {
          poisoned_ = true;
          detected_[r] = true;
          continue;
        }
        Message msg = std::move(box.front());
        box.pop_front();
        if (msg.tag != tag_) throw std::logic_error("out-of-order ghost message");
        if (!detected_[r]) write_ghost(buffer_of(rk), dir, msg.values);
      }
    }
    ++tag_;
  }

  void clear_detection() { detected_.clear(); }

  void purge_mailboxes() {
    for (auto& rk : ranks_) {
      for (auto& box : rk.inbox) box.clear();
    }
  }

  JacobiConfig config_;
  ProcessTopology topo_;
  std::vector<EmulatedRank> ranks_;
  std::map<ProcessIndex, StoredCheckpoint> store_;
  std::int64_t committed_label_ = -1;
  std::int64_t tag_ = 0;
  bool poisoned_ = false;
  std::map<ProcessIndex, bool> detected_;
};

/// Runs max_iters logical iterations, optionally injecting one fail-stop
/// failure and recovering with the given strategy.
inline RunResult run_jacobi(const JacobiConfig& config, std::optional<FaultSpec> fault = std::nullopt,
                            RecoveryKind strategy = RecoveryKind::Dfr, RunOptions options = {}) {
  World world(config);
  const auto iters = config.max_iters;
  if (fault) {
    world.topology().check(fault->victim);
    if (fault->fail_at_iteration < 0 || fault->fail_at_iteration > iters) {
      throw std::invalid_argument("fail_at_iteration must lie in [0, max_iters]");
    }
  }

  RunResult result;
  result.summed_squares.assign(static_cast<std::size_t>(iters), 0.0);
  result.residuals.assign(static_cast<std::size_t>(iters), 0.0);
  bool fault_pending = fault.has_value();
  std::int64_t rejoin = -1;  // failed iteration until the replacement state is captured

  std::int64_t k = 0;
  while (k < iters) {
    if (k == rejoin) {
      result.recovery->replacement_at_rejoin = world.rank(result.recovery->victim).om;
      rejoin = -1;
    }
    if (fault_pending && k == fault->fail_at_iteration) {
      world.kill(fault->victim);
      fault_pending = false;
    }
    const auto outcome = world.iterate(k);
    ++result.iterations_executed;
    if (outcome.ok) {
      result.summed_squares[static_cast<std::size_t>(k)] = world.summed_squares_now();
      result.residuals[static_cast<std::size_t>(k)] = outcome.residual;
      ++k;
      if (config.residual_tolerance > 0 && outcome.residual < config.residual_tolerance) break;
      continue;
    }

    if (result.recovery) throw std::runtime_error("failure during recovery is not supported");
    // Error path: every rank is here. Replace the victim, then recover.
    RecoveryReport report;
    report.kind = strategy;
    report.victim = fault->victim;
    report.failed_iter = k;
    report.last_ckpt = world.committed_checkpoint();
    report.offset = k - report.last_ckpt;
    std::vector<std::int64_t> before;
    for (ProcessIndex r = 0; r < world.size(); ++r) before.push_back(world.rank(r).flops);

    world.respawn(fault->victim);
    if (strategy == RecoveryKind::Global) {
      world.global_recover();
      for (ProcessIndex r = 0; r < world.size(); ++r) report.participants.push_back(r);
      report.rounds = report.offset - 1;
      report.recomputed_rank_iterations = report.rounds * world.size();
      k = report.last_ckpt + 1;
      // Re-execution runs through the normal loop; its arithmetic up to the
      // rejoin point is attributed to the recovery below.
    } else {
      report.participants = world.dfr_recover(fault->victim, k, &report.rounds);
      report.recomputed_rank_iterations = report.rounds * static_cast<std::int64_t>(report.participants.size());
    }
    report.state_during_recovery.assign(static_cast<std::size_t>(world.size()), HostState::Computing);
    for (ProcessIndex r = 0; r < world.size(); ++r) {
      const bool in = std::find(report.participants.begin(), report.participants.end(), r) != report.participants.end();
      if (!in) {
        report.state_during_recovery[static_cast<std::size_t>(r)] =
            options.frequency_scaling_emulated ? HostState::IdleScaled : HostState::IdleUnscaled;
      }
    }
    report.recovery_flops.assign(static_cast<std::size_t>(world.size()), 0);
    if (strategy == RecoveryKind::Dfr) {
      for (ProcessIndex r = 0; r < world.size(); ++r) {
        report.recovery_flops[static_cast<std::size_t>(r)] = world.rank(r).flops - before[static_cast<std::size_t>(r)];
      }
    }
    rejoin = report.failed_iter;
    result.recovery = std::move(report);
    if (strategy == RecoveryKind::Global) {
      // Replay the lost iterations; they are recovery work.
      while (k < rejoin) {
        const auto again = world.iterate(k);
        ++result.iterations_executed;
        if (!again.ok) throw std::runtime_error("failure during recovery is not supported");
        result.summed_squares[static_cast<std::size_t>(k)] = world.summed_squares_now();
        result.residuals[static_cast<std::size_t>(k)] = again.residual;
        ++k;
      }
      for (ProcessIndex r = 0; r < world.size(); ++r) {
        result.recovery->recovery_flops[static_cast<std::size_t>(r)] =
            world.rank(r).flops - before[static_cast<std::size_t>(r)];
      }
    }
  }
  if (rejoin >= 0 && result.recovery) {
    result.recovery->replacement_at_rejoin = world.rank(result.recovery->victim).om;
  }
  result.final_grids = world.grids();
  return result;
}

/// Bit-exact comparison of histories and final grids.
inline bool identical(const RunResult& a, const RunResult& b) {
  if (a.summed_squares != b.summed_squares || a.final_grids.size() != b.final_grids.size()) return false;
  for (std::size_t i = 0; i < a.final_grids.size(); ++i) {
    if (!a.final_grids[i].same_owned(b.final_grids[i])) return false;
  }
  return true;
}

}  // namespace dfr::jacobi
