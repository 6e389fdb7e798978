#pragma once

// Hosts, star-network links and the four-state host power model.

#include <cstdint>
#include <stdexcept>
#include <string_view>

namespace dfr {

struct HostSpec {
  std::int64_t id = 0;
  double flops_rate = 20e9;  // FLOP/s
};

struct LinkSpec {
  double bandwidth = 1e9;  // bit/s
  double latency = 50e-6;  // s
};

enum class HostState { Computing, Communicating, IdleUnscaled, IdleScaled };

inline std::string_view to_string(HostState s) {
  switch (s) {
    case HostState::Computing: return "computing";
    case HostState::Communicating: return "communicating";
    case HostState::IdleUnscaled: return "idle_unscaled";
    case HostState::IdleScaled: return "idle_scaled";
  }
  return "?";
}

struct PowerModel {
  double computing = 125.0;       // W
  double idle_unscaled = 123.5;   // W, 1.5 W below computing
  double idle_scaled = 110.0;     // W, CPU capped to minimum frequency
  double communicating = 125.0;   // W

  void validate() const {
    if (computing < 0 || idle_unscaled < 0 || idle_scaled < 0 || communicating < 0) {
      throw std::invalid_argument("power levels must be non-negative");
    }
    if (!(idle_scaled <= idle_unscaled && idle_unscaled <= computing)) {
      throw std::invalid_argument("power model requires idle_scaled <= idle_unscaled <= computing");
    }
  }
};

/// Everything the engine needs to turn work and bytes into time and watts.
struct PlatformModel {
  HostSpec host;            // every host is identical
  LinkSpec link;
  PowerModel power;
  double task_flops = 200e9;
  double element_bytes = 8.0;
  double subdomain_elements = 1e5;  // also the size of one boundary exchange
  bool model_reload_traffic = true;

  double subdomain_bytes() const { return element_bytes * subdomain_elements; }

  void validate() const {
    if (!(host.flops_rate > 0)) throw std::invalid_argument("flops_rate must be > 0");
    if (!(link.bandwidth > 0)) throw std::invalid_argument("bandwidth must be > 0");
    if (!(link.latency >= 0)) throw std::invalid_argument("latency must be >= 0");
    if (!(task_flops >= 0)) throw std::invalid_argument("task_flops must be >= 0");
    if (!(element_bytes > 0) || !(subdomain_elements >= 0)) {
      throw std::invalid_argument("element sizes must be positive");
    }
    power.validate();
  }
};

inline double task_duration(double flops, const HostSpec& host) {
  if (flops < 0) throw std::invalid_argument("negative flops");
  return flops / host.flops_rate;
}

/// Contention-free star: one latency term plus serialization on one link.
inline double transfer_time(double bytes, const LinkSpec& link) {
  if (bytes < 0) throw std::invalid_argument("negative byte count");
  return link.latency + (8.0 * bytes) / link.bandwidth;
}

inline double power_draw(HostState state, const PowerModel& model) {
  switch (state) {
    case HostState::Computing: return model.computing;
    case HostState::Communicating: return model.communicating;
    case HostState::IdleUnscaled: return model.idle_unscaled;
    case HostState::IdleScaled: return model.idle_scaled;
  }
  return 0.0;
}

}  // namespace dfr
