#pragma once

// Seeded per-node exponential failure traces and the single-failure
// admission policy (failures arriving during a recovery are deferred).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace dfr {

inline constexpr std::string_view kPrngIdentity =
    "mt19937_64 per node; node seed = splitmix64(seed + 0x9E3779B97F4A7C15*(node+1)); "
    "u = (x >> 11) * 2^-53";

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Deterministic 64-bit stream with a portable uniform [0, 1) mapping.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng for_node(std::uint64_t master_seed, std::int64_t node) {
    return Rng(splitmix64(master_seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(node + 1)));
  }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Inverse transform of u in [0, 1).
inline double exponential_from_uniform(double u, double mtbf) {
  if (!(mtbf > 0)) throw std::invalid_argument("mtbf must be positive");
  return -mtbf * std::log1p(-u);
}

inline double sample_exponential(Rng& rng, double mtbf) {
  if (!(mtbf > 0)) throw std::invalid_argument("mtbf must be positive");
  return exponential_from_uniform(rng.uniform(), mtbf);
}

struct FailureEvent {
  double time = 0.0;
  std::int64_t host = 0;
  friend bool operator==(const FailureEvent&, const FailureEvent&) = default;
};

struct FailureTrace {
  std::uint64_t seed = 0;
  double node_mtbf = 0.0;
  double horizon = 0.0;
  std::vector<FailureEvent> events;  // sorted by (time, host)
};

/// Each node draws exponential inter-arrival times from its own stream until
/// the horizon; a replaced node keeps consuming the same stream.
inline FailureTrace generate_trace(std::uint64_t seed, std::int64_t n, double node_mtbf, double horizon) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!(node_mtbf > 0)) throw std::invalid_argument("node MTBF must be positive");
  if (!(horizon > 0)) throw std::invalid_argument("horizon must be positive");
  FailureTrace trace{seed, node_mtbf, horizon, {}};
  for (std::int64_t node = 0; node < n; ++node) {
    auto rng = Rng::for_node(seed, node);
    double t = 0.0;
    while (true) {
      t += sample_exponential(rng, node_mtbf);
      if (t >= horizon) break;
      trace.events.push_back({t, node});
    }
  }
  std::sort(trace.events.begin(), trace.events.end(), [](const FailureEvent& a, const FailureEvent& b) {
    return a.time != b.time ? a.time < b.time : a.host < b.host;
  });
  return trace;
}

/// Hand-written trace, e.g. a single failure at a chosen time.
inline FailureTrace scripted_trace(std::vector<FailureEvent> events, double horizon = 1e300) {
  std::sort(events.begin(), events.end(), [](const FailureEvent& a, const FailureEvent& b) {
    return a.time != b.time ? a.time < b.time : a.host < b.host;
  });
  FailureTrace trace;
  trace.horizon = horizon;
  trace.events = std::move(events);
  return trace;
}

struct Fire {
  FailureEvent event;
  double fire_time;
  bool deferred;
};

/// Cursor over a trace owned by one engine. admit() returns the next event
/// that may fire at `now`, or nothing when the next event is in the future or
/// must wait for the current recovery to finish.
class FailureCursor {
 public:
  explicit FailureCursor(const FailureTrace& trace) : trace_(&trace) {}

  std::optional<double> next_time() const {
    if (pos_ >= trace_->events.size()) return std::nullopt;
    return trace_->events[pos_].time;
  }

  std::optional<Fire> admit(double now, bool recovery_active) {
    if (pos_ >= trace_->events.size()) return std::nullopt;
    const auto& ev = trace_->events[pos_];
    if (ev.time > now || recovery_active) return std::nullopt;
    ++pos_;
    return Fire{ev, now, now > ev.time};
  }

  std::size_t consumed() const { return pos_; }

 private:
  const FailureTrace* trace_;
  std::size_t pos_ = 0;
};

}  // namespace dfr
