#pragma once

// Deterministic discrete-event executor for the unrolled 1D stencil DAG.
//
// One process per host. A forefront task (p, i) starts once (p, i-1) is done
// on p and the boundary data of iteration i-1 from both neighbours has
// arrived. Checkpoints are coordinated: every process sends its subdomain to
// its buddy after iterations that are positive multiples of C_it, and the
// checkpoint counts as committed once all transfers of that iteration land.
//
// A fired failure stops the world: running tasks and in-flight transfers are
// cancelled, every host enters the error path, the strategy's plan is
// executed, and a post-recovery barrier (RecoveryComplete) releases all hosts,
// which then re-exchange boundary data and continue. Non-participants idle
// between detection and the barrier, at the scaled power level when frequency
// scaling is on.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfr/failure_injection.hpp"
#include "dfr/platform.hpp"
#include "dfr/strategies.hpp"
#include "dfr/task_graph.hpp"

namespace dfr {

struct SimOptions {
  bool frequency_scaling = false;
  bool record_timeline = true;
};

struct StateInterval {
  double start = 0.0;
  double end = 0.0;
  HostState state = HostState::Computing;
  friend bool operator==(const StateInterval&, const StateInterval&) = default;
};

struct StateTimeline {
  std::vector<std::vector<StateInterval>> hosts;
  double makespan = 0.0;
  friend bool operator==(const StateTimeline&, const StateTimeline&) = default;
};

struct RecoveryRecord {
  FailureEvent event;
  double fired_at = 0.0;
  bool deferred = false;
  Iteration failed_iter = 0;
  Iteration last_ckpt_iter = 0;
  Iteration offset = 0;
  std::int64_t recomputed = 0;
  std::vector<ProcessIndex> participants;
  double end = 0.0;
  friend bool operator==(const RecoveryRecord&, const RecoveryRecord&) = default;
};

struct RunMetrics {
  StrategyKind strategy = StrategyKind::Global;
  std::uint64_t seed = 0;
  double makespan = 0.0;
  std::int64_t recomputed_tasks = 0;
  std::int64_t failures_fired = 0;
  std::int64_t completed_tasks = 0;  // forefront + recovery completions
  std::int64_t aborted_tasks = 0;    // running when a failure stopped the world
  std::vector<double> per_host_energy;
  double total_energy = 0.0;
  double projected_savings = 0.0;  // filled in against a reference run
  friend bool operator==(const RunMetrics&, const RunMetrics&) = default;
};

struct SimResult {
  RunMetrics metrics;
  StateTimeline timeline;
  std::vector<RecoveryRecord> recoveries;
};

/// Buddy pairs (2k, 2k+1). With odd n the last process stores at n-2; a
/// single process stores at itself.
inline ProcessIndex buddy_of(ProcessIndex p, std::int64_t n) {
  if (n == 1) return p;
  if (n % 2 == 1 && p == n - 1) return n - 2;
  return p ^ 1;
}

/// Energy of a timeline: sum of power_draw(state) * duration per host.
/// Throws on gaps, overlaps, or coverage other than [0, makespan].
inline std::vector<double> integrate_timeline(const StateTimeline& timeline, const PowerModel& power) {
  std::vector<double> energy;
  energy.reserve(timeline.hosts.size());
  for (std::size_t h = 0; h < timeline.hosts.size(); ++h) {
    const auto& iv = timeline.hosts[h];
    double e = 0.0;
    double cursor = 0.0;
    for (const auto& s : iv) {
      if (s.start != cursor) {
        throw std::logic_error("malformed timeline: host " + std::to_string(h) + " has a gap or overlap at t=" +
                               std::to_string(s.start));
      }
      if (!(s.end > s.start)) throw std::logic_error("malformed timeline: empty or reversed interval");
      e += power_draw(s.state, power) * (s.end - s.start);
      cursor = s.end;
    }
    if (cursor != timeline.makespan) {
      throw std::logic_error("malformed timeline: host " + std::to_string(h) + " does not end at makespan");
    }
    energy.push_back(e);
  }
  return energy;
}

class Simulator {
 public:
  Simulator(TaskGraph& graph, const PlatformModel& platform, const FailureTrace& trace, StrategyKind strategy,
            SimOptions options = {})
      : graph_(graph),
        platform_(platform),
        trace_(trace),
        strategy_(strategy),
        options_(options),
        n_(graph.processes()),
        iterations_(graph.iterations()),
        ckpt_interval_(graph.checkpoint_interval()),
        cursor_(trace) {
    platform_.validate();
    if (graph.topology().kind() != TopologyKind::Line1D) {
      throw std::invalid_argument("simulation supports Line1D topologies only");
    }
    task_time_ = task_duration(platform_.task_flops, platform_.host);
    ghost_time_ = transfer_time(platform_.subdomain_bytes(), platform_.link);
    ckpt_time_ = ghost_time_;
    reload_time_ = platform_.model_reload_traffic ? ghost_time_ : 0.0;
  }

  SimResult run() {
    reset();
    for (ProcessIndex p = 0; p < n_; ++p) try_start(p);
    for (ProcessIndex p = 0; p < n_; ++p) refresh(p);
    schedule_next_failure(0.0);

    while (!queue_.empty() && !finished_) {
      const Event ev = queue_.top();
      queue_.pop();
      now_ = ev.time;
      if (ev.kind != Kind::Failure && ev.epoch != epoch_) continue;
      switch (ev.kind) {
        case Kind::TaskComplete: on_task_complete(ev); break;
        case Kind::TransferComplete: on_transfer_complete(ev); break;
        case Kind::CheckpointComplete: on_checkpoint_complete(ev); break;
        case Kind::RecoveryComplete: on_recovery_complete(); break;
        case Kind::Failure: on_failure_event(); break;
      }
    }
    if (!finished_) throw std::logic_error("simulation stalled before completing all tasks");
    return finish();
  }

 private:
  enum class Kind : int { TaskComplete = 0, TransferComplete = 1, CheckpointComplete = 2, RecoveryComplete = 3, Failure = 4 };
  enum class Purpose : int { Ghost, Reload, RecoveryInput, Replay };

  struct Event {
    double time = 0.0;
    Kind kind = Kind::TaskComplete;
    ProcessIndex host = 0;     // receiving / executing host
    Iteration iteration = 0;
    ProcessIndex from = 0;     // sending host for transfers
    Purpose purpose = Purpose::Ghost;
    bool recovery = false;     // TaskComplete of a recovery task
    std::uint64_t epoch = 0;
    std::uint64_t seq = 0;
  };

  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      if (a.kind != b.kind) return a.kind > b.kind;
      if (a.host != b.host) return a.host > b.host;
      if (a.iteration != b.iteration) return a.iteration > b.iteration;
      return a.seq > b.seq;
    }
  };

  struct Host {
    Iteration completed = -1;
    bool running = false;
    bool running_recovery = false;
    Iteration running_iter = 0;
    Iteration recv_left = -1;
    Iteration recv_right = -1;
    int inflight = 0;
    HostState state = HostState::Computing;
    double since = 0.0;
    double energy = 0.0;
  };

  struct Recovery {
    RecoveryPlan plan;
    std::vector<char> participant;
    std::vector<int> pending;  // per (level-1)*n + p, -1 when not planned
    std::int64_t tasks_left = 0;
    std::int64_t loads_left = 0;
    std::size_t record = 0;
  };

  // ---------------------------------------------------------------- plumbing

  void push(Event ev) {
    ev.seq = seq_++;
    if (ev.kind != Kind::Failure) ev.epoch = epoch_;
    queue_.push(ev);
  }

  void reset() {
    for (auto& node : graph_.nodes()) {
      node.state = TaskState::Pending;
      node.generation = 0;
    }
    hosts_.assign(static_cast<std::size_t>(n_), Host{});
    if (options_.record_timeline) timeline_.hosts.assign(static_cast<std::size_t>(n_), {});
    queue_ = {};
    epoch_ = 0;
    seq_ = 0;
    now_ = 0.0;
    finished_ = false;
    done_hosts_ = 0;
    global_ckpt_ = 0;
    ckpt_commits_.clear();
    recovery_.reset();
    metrics_ = RunMetrics{};
    metrics_.strategy = strategy_;
    metrics_.seed = trace_.seed;
    recoveries_.clear();
  }

  Host& host(ProcessIndex p) { return hosts_[static_cast<std::size_t>(p)]; }

  bool is_participant(ProcessIndex p) const {
    return recovery_ && recovery_->participant[static_cast<std::size_t>(p)];
  }

  HostState desired_state(ProcessIndex p) {
    auto& h = host(p);
    if (h.running) return HostState::Computing;
    if (recovery_ && !is_participant(p)) {
      return options_.frequency_scaling ? HostState::IdleScaled : HostState::IdleUnscaled;
    }
    if (h.inflight > 0) return HostState::Communicating;
    return HostState::IdleUnscaled;
  }

  void close_interval(ProcessIndex p, double until) {
    auto& h = host(p);
    if (until > h.since) {
      h.energy += power_draw(h.state, platform_.power) * (until - h.since);
      if (options_.record_timeline) {
        auto& tl = timeline_.hosts[static_cast<std::size_t>(p)];
        if (!tl.empty() && tl.back().state == h.state && tl.back().end == h.since) {
          tl.back().end = until;
        } else {
          tl.push_back({h.since, until, h.state});
        }
      }
    }
    h.since = until;
  }

  void refresh(ProcessIndex p) {
    auto& h = host(p);
    const auto want = desired_state(p);
    if (want == h.state) return;
    close_interval(p, now_);
    h.state = want;
  }

  void start_transfer(ProcessIndex from, ProcessIndex to, double duration, Event ev) {
    ev.time = now_ + duration;
    ev.kind = Kind::TransferComplete;
    ev.from = from;
    ev.host = to;
    push(ev);
    host(from).inflight++;
    if (to != from) host(to).inflight++;
    refresh(from);
    refresh(to);
  }

  void end_transfer(const Event& ev) {
    host(ev.from).inflight--;
    if (ev.host != ev.from) host(ev.host).inflight--;
    refresh(ev.from);
    refresh(ev.host);
  }

  // --------------------------------------------------------------- forefront

  bool inputs_ready(ProcessIndex p, Iteration i) {
    if (i == 0) return true;
    const auto& h = host(p);
    if (p > 0 && h.recv_left < i - 1) return false;
    if (p < n_ - 1 && h.recv_right < i - 1) return false;
    return true;
  }

  void try_start(ProcessIndex p) {
    if (recovery_ || finished_) return;
    auto& h = host(p);
    const Iteration next = h.completed + 1;
    if (h.running || next >= iterations_ || !inputs_ready(p, next)) return;
    auto& node = graph_.node({p, next});
    for (const auto& in : node.inputs) {
      if (graph_.node(in).state != TaskState::Done) {
        throw std::logic_error("dependency violated: task started before its inputs completed");
      }
    }
    node.state = TaskState::Running;
    h.running = true;
    h.running_recovery = false;
    h.running_iter = next;
    Event ev;
    ev.time = now_ + task_duration(node.flops, platform_.host);
    ev.kind = Kind::TaskComplete;
    ev.host = p;
    ev.iteration = next;
    push(ev);
    refresh(p);
  }

  void on_task_complete(const Event& ev) {
    if (ev.recovery) {
      on_recovery_task_complete(ev);
      return;
    }
    const ProcessIndex p = ev.host;
    const Iteration i = ev.iteration;
    auto& h = host(p);
    h.running = false;
    h.completed = i;
    auto& node = graph_.node({p, i});
    node.state = TaskState::Done;
    node.generation++;
    metrics_.completed_tasks++;

    if (i < iterations_ - 1) {
      Event g;
      g.purpose = Purpose::Ghost;
      g.iteration = i;
      if (p > 0) start_transfer(p, p - 1, ghost_time_, g);
      if (p < n_ - 1) start_transfer(p, p + 1, ghost_time_, g);
      if (i > 0 && i % ckpt_interval_ == 0) start_checkpoint(p, i);
    }
    refresh(p);
    if (i == iterations_ - 1 && ++done_hosts_ == n_) {
      finished_ = true;
      metrics_.makespan = now_;
      return;
    }
    try_start(p);
  }

  void on_transfer_complete(const Event& ev) {
    end_transfer(ev);
    switch (ev.purpose) {
      case Purpose::Ghost: {
        auto& h = host(ev.host);
        if (ev.from == ev.host - 1) h.recv_left = std::max(h.recv_left, ev.iteration);
        if (ev.from == ev.host + 1) h.recv_right = std::max(h.recv_right, ev.iteration);
        try_start(ev.host);
        break;
      }
      case Purpose::Reload:
        on_reload_complete(ev.host);
        break;
      case Purpose::RecoveryInput:
      case Purpose::Replay:
        satisfy(ev.host, ev.iteration);
        break;
    }
  }

  void start_checkpoint(ProcessIndex p, Iteration i) {
    const auto b = buddy_of(p, n_);
    host(p).inflight++;
    if (b != p) host(b).inflight++;
    Event ev;
    ev.time = now_ + ckpt_time_;
    ev.kind = Kind::CheckpointComplete;
    ev.host = p;
    ev.from = b;
    ev.iteration = i;
    push(ev);
    refresh(p);
    refresh(b);
  }

  void on_checkpoint_complete(const Event& ev) {
    host(ev.host).inflight--;
    if (ev.from != ev.host) host(ev.from).inflight--;
    refresh(ev.host);
    refresh(ev.from);
    if (++ckpt_commits_[ev.iteration] == n_) {
      global_ckpt_ = std::max(global_ckpt_, ev.iteration);
      ckpt_commits_.erase(ckpt_commits_.begin(), ckpt_commits_.upper_bound(ev.iteration));
    }
  }

  // ---------------------------------------------------------------- failures

  void schedule_next_failure(double not_before) {
    if (auto t = cursor_.next_time()) {
      Event ev;
      ev.time = std::max(*t, not_before);
      ev.kind = Kind::Failure;
      push(ev);
    }
  }

  void on_failure_event() {
    if (recovery_) return;  // deferred; fired at RecoveryComplete
    if (auto fire = cursor_.admit(now_, false)) {
      handle_failure(*fire);
      schedule_next_failure(now_);
    }
  }

  void handle_failure(const Fire& fire) {
    if (recovery_) throw std::logic_error("two failures in recovery at once");
    const ProcessIndex j = fire.event.host;
    if (j < 0 || j >= n_) throw std::out_of_range("failure on a host outside the platform");

    ++epoch_;  // cancels running tasks and in-flight transfers
    const Iteration c = host(j).completed;
    for (ProcessIndex p = 0; p < n_; ++p) {
      auto& h = host(p);
      if (h.completed != c) throw std::logic_error("hosts out of lockstep at failure detection");
      if (h.running) {
        graph_.node({p, h.running_iter}).state = TaskState::Pending;
        h.running = false;
        metrics_.aborted_tasks++;
      }
      h.inflight = 0;
    }
    ckpt_commits_.clear();
    metrics_.failures_fired++;

    const Iteration failed_iter = c + 1;
    const Iteration d = failed_iter - global_ckpt_;
    auto plan = make_plan(strategy_, j, d, graph_.topology(), global_ckpt_);
    validate_plan(plan, graph_);

    for (const auto& t : plan.recompute) {
      if (strategy_ == StrategyKind::Global || t.process == j) graph_.node(t).state = TaskState::Discarded;
    }

    Recovery rec;
    rec.plan = std::move(plan);
    rec.participant.assign(static_cast<std::size_t>(n_), 0);
    for (auto p : rec.plan.participants) rec.participant[static_cast<std::size_t>(p)] = 1;
    const auto levels = std::max<Iteration>(d - 1, 0);
    rec.pending.assign(static_cast<std::size_t>(levels * n_), -1);
    rec.tasks_left = static_cast<std::int64_t>(rec.plan.recompute.size());
    rec.loads_left = static_cast<std::int64_t>(rec.plan.participants.size());

    RecoveryRecord record;
    record.event = fire.event;
    record.fired_at = now_;
    record.deferred = fire.deferred;
    record.failed_iter = failed_iter;
    record.last_ckpt_iter = global_ckpt_;
    record.offset = d;
    record.recomputed = rec.tasks_left;
    record.participants = rec.plan.participants;
    rec.record = recoveries_.size();
    recoveries_.push_back(std::move(record));

    recovery_ = std::move(rec);
    for (const auto& t : recovery_->plan.recompute) {
      pending_at(t.process, t.iteration) = count_inputs(t.process, t.iteration);
    }
    for (ProcessIndex p = 0; p < n_; ++p) refresh(p);
    for (auto p : recovery_->plan.participants) {
      Event ev;
      ev.purpose = Purpose::Reload;
      start_transfer(buddy_of(p, n_), p, reload_time_, ev);
    }
  }

  // ---------------------------------------------------------------- recovery

  int& pending_at(ProcessIndex p, Iteration i) {
    const auto level = i - recovery_->plan.last_ckpt_iter;
    return recovery_->pending[static_cast<std::size_t>((level - 1) * n_ + p)];
  }

  bool planned(ProcessIndex p, Iteration i) {
    const auto level = i - recovery_->plan.last_ckpt_iter;
    if (p < 0 || p >= n_ || level < 1 || level >= recovery_->plan.offset()) return false;
    return pending_at(p, i) != -1;
  }

  enum class Source { Planned, Checkpoint, Replay, None };

  Source source_of(ProcessIndex p, ProcessIndex q, Iteration i) {
    if (planned(q, i - 1)) return Source::Planned;
    const bool at_ckpt = i - 1 == recovery_->plan.last_ckpt_iter;
    if (at_ckpt && recovery_->participant[static_cast<std::size_t>(q)]) return Source::Checkpoint;
    if (strategy_ == StrategyKind::LogBased && q != p) return Source::Replay;
    return Source::None;  // frozen group boundary, no data needed
  }

  int count_inputs(ProcessIndex p, Iteration i) {
    int count = 0;
    for (ProcessIndex q = std::max<ProcessIndex>(0, p - 1); q <= std::min(n_ - 1, p + 1); ++q) {
      if (source_of(p, q, i) != Source::None) ++count;
    }
    if (count == 0) throw std::logic_error("recovery task without inputs");
    return count;
  }

  // Data of (q, iter) became available on q; forward it to planned consumers.
  void publish(ProcessIndex q, Iteration iter) {
    for (ProcessIndex p = std::max<ProcessIndex>(0, q - 1); p <= std::min(n_ - 1, q + 1); ++p) {
      if (!planned(p, iter + 1)) continue;
      const auto src = source_of(p, q, iter + 1);
      if (src != Source::Planned && src != Source::Checkpoint) continue;
      if (p == q) {
        satisfy(p, iter + 1);
      } else {
        Event ev;
        ev.purpose = Purpose::RecoveryInput;
        ev.iteration = iter + 1;
        start_transfer(q, p, ghost_time_, ev);
      }
    }
    // Logged messages are re-sent once the replayed receive is posted.
    if (strategy_ == StrategyKind::LogBased && planned(q, iter + 1)) {
      for (ProcessIndex s = std::max<ProcessIndex>(0, q - 1); s <= std::min(n_ - 1, q + 1); ++s) {
        if (s == q || source_of(q, s, iter + 1) != Source::Replay) continue;
        Event ev;
        ev.purpose = Purpose::Replay;
        ev.iteration = iter + 1;
        start_transfer(s, q, ghost_time_, ev);
      }
    }
  }

  void satisfy(ProcessIndex p, Iteration i) {
    int& left = pending_at(p, i);
    if (left <= 0) throw std::logic_error("recovery input delivered twice");
    if (--left > 0) return;
    auto& h = host(p);
    if (h.running) throw std::logic_error("recovery task scheduled on a busy host");
    h.running = true;
    h.running_recovery = true;
    h.running_iter = i;
    Event ev;
    ev.time = now_ + task_duration(graph_.node({p, i}).flops, platform_.host);
    ev.kind = Kind::TaskComplete;
    ev.host = p;
    ev.iteration = i;
    ev.recovery = true;
    push(ev);
    refresh(p);
  }

  void on_reload_complete(ProcessIndex p) {
    recovery_->loads_left--;
    publish(p, recovery_->plan.last_ckpt_iter);
    maybe_finish_recovery();
  }

  void on_recovery_task_complete(const Event& ev) {
    auto& h = host(ev.host);
    h.running = false;
    h.running_recovery = false;
    auto& node = graph_.node({ev.host, ev.iteration});
    node.generation++;
    node.state = TaskState::Done;
    metrics_.completed_tasks++;
    metrics_.recomputed_tasks++;
    recovery_->tasks_left--;
    refresh(ev.host);
    publish(ev.host, ev.iteration);
    maybe_finish_recovery();
  }

  void maybe_finish_recovery() {
    if (recovery_->tasks_left > 0 || recovery_->loads_left > 0) return;
    Event ev;
    ev.time = now_;
    ev.kind = Kind::RecoveryComplete;
    push(ev);
  }

  void on_recovery_complete() {
    recoveries_[recovery_->record].end = now_;
    const Iteration last = recovery_->plan.last_ckpt_iter;
    recovery_.reset();
    for (ProcessIndex p = 0; p < n_; ++p) {
      auto& h = host(p);
      h.inflight = 0;
      h.recv_left = -1;
      h.recv_right = -1;
    }
    for (ProcessIndex p = 0; p < n_; ++p) refresh(p);

    const Iteration c = host(0).completed;
    if (c > last && c > 0 && c % ckpt_interval_ == 0 && c < iterations_ - 1) {
      for (ProcessIndex p = 0; p < n_; ++p) start_checkpoint(p, c);
    }
    if (c >= 0 && c < iterations_ - 1) {
      for (ProcessIndex p = 0; p < n_; ++p) {
        Event g;
        g.purpose = Purpose::Ghost;
        g.iteration = c;
        if (p > 0) start_transfer(p, p - 1, ghost_time_, g);
        if (p < n_ - 1) start_transfer(p, p + 1, ghost_time_, g);
      }
    }
    if (auto fire = cursor_.admit(now_, false)) {
      handle_failure(*fire);
      schedule_next_failure(now_);
      return;
    }
    for (ProcessIndex p = 0; p < n_; ++p) try_start(p);
  }

  // ------------------------------------------------------------------ finish

  SimResult finish() {
    for (ProcessIndex p = 0; p < n_; ++p) close_interval(p, metrics_.makespan);
    std::int64_t recomputed = 0;
    for (const auto& node : graph_.nodes()) {
      if (node.state != TaskState::Done || node.generation < 1) {
        throw std::logic_error("task did not complete");
      }
      recomputed += node.generation - 1;
    }
    if (recomputed != metrics_.recomputed_tasks ||
        metrics_.completed_tasks != n_ * iterations_ + metrics_.recomputed_tasks) {
      throw std::logic_error("task accounting mismatch");
    }
    metrics_.per_host_energy.clear();
    metrics_.total_energy = 0.0;
    for (const auto& h : hosts_) {
      metrics_.per_host_energy.push_back(h.energy);
      metrics_.total_energy += h.energy;
    }
    SimResult result;
    result.metrics = metrics_;
    timeline_.makespan = metrics_.makespan;
    if (options_.record_timeline) result.timeline = std::move(timeline_);
    result.timeline.makespan = metrics_.makespan;
    result.recoveries = std::move(recoveries_);
    return result;
  }

  TaskGraph& graph_;
  PlatformModel platform_;
  const FailureTrace& trace_;
  StrategyKind strategy_;
  SimOptions options_;
  std::int64_t n_;
  Iteration iterations_;
  Iteration ckpt_interval_;
  FailureCursor cursor_;

  double task_time_ = 0.0;
  double ghost_time_ = 0.0;
  double ckpt_time_ = 0.0;
  double reload_time_ = 0.0;

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t epoch_ = 0;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;
  bool finished_ = false;
  std::int64_t done_hosts_ = 0;
  Iteration global_ckpt_ = 0;
  std::map<Iteration, std::int64_t> ckpt_commits_;
  std::vector<Host> hosts_;
  std::optional<Recovery> recovery_;
  RunMetrics metrics_;
  StateTimeline timeline_;
  std::vector<RecoveryRecord> recoveries_;
};

/// Resets the graph's task states, then runs one simulation.
inline SimResult run_simulation(TaskGraph& graph, const PlatformModel& platform, const FailureTrace& trace,
                                StrategyKind strategy, SimOptions options = {}) {
  Simulator sim(graph, platform, trace, strategy, options);
  return sim.run();
}

}  // namespace dfr
