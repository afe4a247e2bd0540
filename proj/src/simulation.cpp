#include "cavsim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cavsim/rng.hpp"

namespace cavsim {

namespace {

// Stream tags for the counter-based generator.
constexpr std::uint64_t kArrivalStream = 0x41525249ULL;
constexpr std::uint64_t kSpeedStream = 0x53504421ULL;

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(values.size())));
  return values[std::min(values.size() - 1, rank == 0 ? 0 : rank - 1)];
}

}  // namespace

void SimConfig::validate() const {
  limits.validate();
  if (!(params.tau_l > 0.0)) throw ConfigError("tau_l must be positive");
  if (!gap_guarantee_holds(params) && !allow_weak_headways)
    throw ConfigError("tau_r must be at least 2*tau_l to guarantee usable gaps "
                      "at conflict points; set allow_weak_headways to override");
  if (!(duration > 0.0)) throw ConfigError("duration must be positive");
  if (!(sample_dt > 0.0)) throw ConfigError("sample_dt must be positive");
  if (!(planner.scan_step > 0.0)) throw ConfigError("scan_step must be positive");
  if (!(planner.position_step > 0.0))
    throw ConfigError("position_step must be positive");
  if (arrivals.rate_per_path < 0.0) throw ConfigError("arrival rate must be >= 0");
  for (const auto &[path_id, rate] : arrivals.rate_overrides) {
    if (rate < 0.0) throw ConfigError("arrival rate must be >= 0");
    if (!layout.has_path(path_id))
      throw ConfigError("arrival rate override for unknown path " +
                        std::to_string(path_id));
  }
  if (!(arrivals.entry_speed_lo <= arrivals.entry_speed_hi) ||
      arrivals.entry_speed_lo < limits.v_min ||
      arrivals.entry_speed_hi > limits.v_max)
    throw ConfigError("entry speed range must lie within [v_min, v_max]");
}

std::vector<Arrival> generate_arrivals(const SimConfig &config) {
  config.validate();
  const CounterRng rng(config.rng_seed);

  std::vector<Arrival> arrivals;
  for (const auto &path : config.layout.paths()) {
    const double rate = config.arrivals.rate_for(path.path_id);
    if (rate <= 0.0) continue;
    const std::uint64_t path_tag = static_cast<std::uint64_t>(path.path_id) + 1;
    double raw = 0.0;
    double last = -std::numeric_limits<double>::infinity();
    for (std::uint64_t k = 0;; ++k) {
      raw += rng.exponential(kArrivalStream * path_tag, k, rate);
      const double t = std::max(raw, last + config.params.tau_r);
      if (t > config.duration) break;
      last = t;
      const double v0 = rng.uniform(kSpeedStream * path_tag, k,
                                    config.arrivals.entry_speed_lo,
                                    config.arrivals.entry_speed_hi);
      arrivals.push_back(Arrival{t, path.path_id, v0});
    }
  }
  std::sort(arrivals.begin(), arrivals.end(), [](const Arrival &a, const Arrival &b) {
    if (a.t_arrival != b.t_arrival) return a.t_arrival < b.t_arrival;
    return a.path_id < b.path_id;
  });
  return arrivals;
}

RunOutput run(const SimConfig &config) {
  config.validate();
  const std::vector<Arrival> arrivals = generate_arrivals(config);

  RunOutput out;
  std::vector<double> latencies;
  std::vector<double> travel_times, energies, jerks;

  int vehicle_id = 0;
  for (const Arrival &arrival : arrivals) {
    ++vehicle_id;
    PlanRequest req;
    req.vehicle_id = vehicle_id;
    req.path_id = arrival.path_id;
    req.entry = EntryState{arrival.t_arrival, 0.0, arrival.v0};
    req.limits = config.limits;
    req.params = config.params;

    const PlanResult result = plan(req, out.ledger, config.layout, config.planner);
    latencies.push_back(result.diagnostics.solve_seconds);

    switch (result.status) {
      case PlanStatus::Cubic:
        ++out.metrics.vehicles_cubic;
        break;
      case PlanStatus::QuarticFallback:
        ++out.metrics.vehicles_fallback;
        break;
      case PlanStatus::Infeasible:
        ++out.metrics.vehicles_rejected;
        out.rejected.push_back(RejectedVehicle{vehicle_id, arrival.path_id,
                                               arrival.t_arrival,
                                               result.diagnostics.note});
        break;
    }
    if (result.status != PlanStatus::Infeasible) {
      travel_times.push_back(result.exit_time - arrival.t_arrival);
      energies.push_back(squared_accel_integral(*result.trajectory));
      jerks.push_back(squared_jerk_integral(*result.trajectory));
    }
  }

  out.metrics.vehicles_total = static_cast<int>(arrivals.size());
  if (!travel_times.empty()) {
    const auto mean = [](const std::vector<double> &v) {
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    out.metrics.mean_travel_time = mean(travel_times);
    out.metrics.max_travel_time =
        *std::max_element(travel_times.begin(), travel_times.end());
    out.metrics.mean_energy = mean(energies);
    out.metrics.mean_jerk_integral = mean(jerks);
  }
  out.metrics.latency_p50 = percentile(latencies, 0.50);
  out.metrics.latency_p95 = percentile(latencies, 0.95);

  out.violations = audit(out.ledger, config.layout, config.params, config.limits,
                         config.planner.position_step);
  out.metrics.audit_violations = static_cast<int>(out.violations.size());
  return out;
}

std::vector<SweepRow> sweep(const SimConfig &base, const std::vector<double> &rates,
                            const std::vector<std::uint64_t> &seeds) {
  if (rates.empty()) throw ConfigError("sweep needs at least one rate");
  if (seeds.empty()) throw ConfigError("sweep needs at least one seed");

  std::vector<SweepRow> rows;
  for (double rate : rates) {
    for (std::uint64_t seed : seeds) {
      SimConfig config = base;
      config.arrivals.rate_per_path = rate;
      config.arrivals.rate_overrides.clear();
      config.rng_seed = seed;
      rows.push_back(SweepRow{rate, seed, run(config).metrics});
    }
  }
  return rows;
}

}  // namespace cavsim
