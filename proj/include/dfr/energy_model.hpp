#pragma once

// Analytic savings model for localized rollback: neighbours pulled into a
// recovery, idle processes, per-phase savings and the system-wide rate.

#include <algorithm>
#include <cstdint>
#include <stdexcept>

namespace dfr::model {

inline constexpr double kSecondsPerHour = 3600.0;
inline constexpr double kSecondsPerYear = 365.0 * 24.0 * 3600.0;

struct ModelParams {
  double n = 1;              // processes
  double mu = kSecondsPerYear;  // per-node MTBF, seconds
  std::int64_t c_it = 1;     // checkpoint interval, iterations
  double iter_seconds = 4.0;
  double delta_power = 10.0;  // W saved per idle host
  int dim = 1;

  void validate() const {
    if (!(n >= 1)) throw std::invalid_argument("n must be >= 1");
    if (!(mu > 0)) throw std::invalid_argument("mu must be positive");
    if (c_it < 1) throw std::invalid_argument("c_it must be >= 1");
    if (!(iter_seconds > 0)) throw std::invalid_argument("iter_seconds must be positive");
    if (!(delta_power >= 0)) throw std::invalid_argument("delta_power must be >= 0");
    if (dim != 1 && dim != 2) throw std::invalid_argument("dim must be 1 or 2");
  }
};

/// Neighbours supporting a recovery i iterations after the last checkpoint.
inline double p_neigh(std::int64_t i, int dim) {
  if (i < 0) throw std::invalid_argument("i must be >= 0");
  if (dim != 1 && dim != 2) throw std::invalid_argument("dim must be 1 or 2");
  const double line = 2.0 * static_cast<double>(std::max<std::int64_t>(i - 1, 0));
  return dim == 1 ? line : line * line;
}

/// Mean of p_neigh over a uniformly placed failure in one checkpoint interval.
inline double p_active(std::int64_t c_it, int dim) {
  if (c_it < 1) throw std::invalid_argument("c_it must be >= 1");
  double sum = 0.0;
  for (std::int64_t j = 1; j <= c_it; ++j) sum += p_neigh(j, dim);
  return sum / static_cast<double>(c_it);
}

/// Clamped at zero: with global dependencies nobody idles.
inline double p_idle(double n, std::int64_t c_it, int dim) {
  if (!(n >= 1)) throw std::invalid_argument("n must be >= 1");
  return std::max(n - p_active(c_it, dim), 0.0);
}

/// Savings per idle process and recovery phase; mean rollback is c_it / 2.
inline double c_e(double delta_power, double iter_seconds, std::int64_t c_it) {
  return delta_power * iter_seconds * static_cast<double>(c_it) / 2.0;
}

/// System-wide savings rate in W: failure rate n/mu times idle processes times c_e.
inline double savings_rate(double n, double mu, double p_idle_value, double c_e_value) {
  if (!(mu > 0)) throw std::invalid_argument("mu must be positive");
  return (n / mu) * p_idle_value * c_e_value;
}

/// n^2 / mu * c_e, i.e. savings_rate with p_idle approximated by n. With the
/// default 10 W over 4 s iterations, c_e = 20 * c_it.
inline double e_jacobi(double n, double mu, std::int64_t c_it, double delta_power = 10.0,
                       double iter_seconds = 4.0) {
  if (!(n > 0) || !(mu > 0) || c_it < 1) throw std::invalid_argument("e_jacobi needs positive n, mu, c_it");
  return n * n / mu * c_e(delta_power, iter_seconds, c_it);
}

inline double project_savings(double delta_recomputed_tasks, double joules_per_task) {
  if (!(joules_per_task >= 0)) throw std::invalid_argument("joules_per_task must be >= 0");
  return delta_recomputed_tasks * joules_per_task;
}

}  // namespace dfr::model
