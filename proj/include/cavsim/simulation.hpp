#ifndef CAVSIM_SIMULATION_HPP
#define CAVSIM_SIMULATION_HPP

#include <cstdint>
#include <map>
#include <vector>

#include "cavsim/constraints.hpp"
#include "cavsim/geometry.hpp"
#include "cavsim/planner.hpp"

namespace cavsim {

struct ArrivalModel {
  double rate_per_path = 0.05;          // vehicles/second on every path
  std::map<int, double> rate_overrides;  // per-path overrides
  double entry_speed_lo = 8.0;           // uniform entry-speed range
  double entry_speed_hi = 12.0;

  double rate_for(int path_id) const {
    const auto it = rate_overrides.find(path_id);
    return it == rate_overrides.end() ? rate_per_path : it->second;
  }
};

struct SimConfig {
  IntersectionLayout layout;
  KinematicLimits limits;
  SafetyParams params;
  ArrivalModel arrivals;
  double duration = 120.0;
  std::uint64_t rng_seed = 1;
  double sample_dt = 0.1;  // trajectory export resolution
  PlannerOptions planner;
  bool allow_weak_headways = false;

  void validate() const;  // throws ConfigError
};

struct Arrival {
  double t_arrival;
  int path_id;
  double v0;
};

struct Metrics {
  int vehicles_total = 0;
  int vehicles_cubic = 0;
  int vehicles_fallback = 0;
  int vehicles_rejected = 0;
  double mean_travel_time = 0.0;
  double max_travel_time = 0.0;
  double mean_energy = 0.0;        // mean of the squared-acceleration integral
  double mean_jerk_integral = 0.0;
  double latency_p50 = 0.0;  // planner wall time, seconds (machine-dependent)
  double latency_p95 = 0.0;
  int audit_violations = 0;
};

struct RejectedVehicle {
  int vehicle_id;
  int path_id;
  double t_arrival;
  std::string note;
};

struct RunOutput {
  OccupancyLedger ledger;
  std::vector<RejectedVehicle> rejected;
  Metrics metrics;
  std::vector<Violation> violations;  // from the end-of-run audit
};

/// Per-path Poisson arrivals over [0, duration] with uniform entry speeds,
/// driven entirely by the counter-based generator so a seed fixes the list.
/// Same-path arrivals closer than tau_r are shifted later: vehicles cannot
/// physically enter inside the rear-end headway.
std::vector<Arrival> generate_arrivals(const SimConfig &config);

/// Discrete-event run: arrivals are planned in time order against the growing
/// ledger, rejections are recorded as data, and the whole committed ledger is
/// audited at the end. Deterministic given (config, seed).
RunOutput run(const SimConfig &config);

struct SweepRow {
  double rate;
  std::uint64_t seed;
  Metrics metrics;
};

/// One run() per (rate, seed) cell, the rate applied to every path; rows in
/// input order.
std::vector<SweepRow> sweep(const SimConfig &base, const std::vector<double> &rates,
                            const std::vector<std::uint64_t> &seeds);

}  // namespace cavsim

#endif  // CAVSIM_SIMULATION_HPP
