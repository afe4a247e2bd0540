#ifndef CAVSIM_IO_HPP
#define CAVSIM_IO_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "cavsim/planner.hpp"
#include "cavsim/simulation.hpp"

namespace cavsim {

inline constexpr const char *kToolVersion = "cavsim 0.1.0";

/// Parses and fully validates a JSON config; all defaults materialized.
/// Throws ConfigError with a JSON-pointer-style location and cause. Non-fatal
/// findings (e.g. a weak-headway override) are appended to `warnings`.
SimConfig parse_config(const std::string &text,
                       std::vector<std::string> *warnings = nullptr);

/// Fully resolved config echo; parsing the echo reproduces the run exactly.
nlohmann::json config_echo(const SimConfig &config);

/// Trajectory time series as CSV. One row per vehicle per sample instant from
/// t_start to t_end inclusive (final partial step clamped to t_end), columns
/// t,vehicle_id,path_id,position_m,speed_mps,accel_mps2,jerk_mps3, fixed
/// 6-decimal formatting, rows sorted by (vehicle_id, t). Deterministic bytes.
std::string export_trajectories(const OccupancyLedger &ledger, double sample_dt);

/// Deterministic run aggregates. Planner latencies are wall-clock and
/// machine-dependent, so they are exported separately by timing_to_json.
nlohmann::json metrics_to_json(const Metrics &metrics);
nlohmann::json timing_to_json(const Metrics &metrics);

nlohmann::json violations_to_json(const std::vector<Violation> &violations);

nlohmann::json plan_result_to_json(const PlanResult &result);

/// Ledger snapshot: vehicles in ascending id order with their trajectory
/// coefficients and committed crossing times.
nlohmann::json ledger_to_json(const OccupancyLedger &ledger);
OccupancyLedger ledger_from_json(const nlohmann::json &j);

/// Re-checks an exported trajectory CSV against the config's layout, limits
/// and headways using only the sampled rows (piecewise-linear inversion,
/// headway margins relaxed by one sample_dt). Independent of planner state
/// and of the polynomial representation.
std::vector<Violation> audit_sampled_trajectories(const std::string &csv_text,
                                                  const SimConfig &config);

struct RunBundle {
  std::string out_dir;
  std::string trajectories_path;
  std::string metrics_path;
  std::string violations_path;
  std::string timing_path;
  std::string run_path;
};

/// Writes trajectories.csv, metrics.json, violations.json, timing.json and
/// run.json (tool version, seed, config echo, file manifest) into out_dir.
RunBundle write_run_bundle(const std::string &out_dir, const SimConfig &config,
                           const RunOutput &output);

}  // namespace cavsim

#endif  // CAVSIM_IO_HPP
