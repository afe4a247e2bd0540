#include "cavsim/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string_view>

namespace cavsim {

namespace {

using nlohmann::json;

std::string fixed6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  if (std::string_view(buf) == "-0.000000") return "0.000000";
  return buf;
}

void require_keys(const json &obj, const std::string &where,
                  const std::set<std::string> &allowed) {
  for (const auto &item : obj.items()) {
    if (!allowed.count(item.key()))
      throw ConfigError(where + "/" + item.key() + ": unknown key");
  }
}

double require_number(const json &obj, const std::string &where, const std::string &key,
                      double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number())
    throw ConfigError(where + "/" + key + ": must be a number");
  return obj[key].get<double>();
}

}  // namespace

SimConfig parse_config(const std::string &text, std::vector<std::string> *warnings) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ConfigError(std::string("/: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("/: config must be a JSON object");
  require_keys(root, "",
               {"layout", "limits", "safety", "arrivals", "seed", "solver", "sample_dt"});

  SimConfig config;

  try {
    config.layout = load_layout(root.value("layout", json("four-leg-12path")));
  } catch (const LayoutError &e) {
    throw ConfigError(std::string("/layout: ") + e.what());
  }

  const json limits = root.value("limits", json::object());
  require_keys(limits, "/limits", {"v_min", "v_max", "u_min", "u_max"});
  config.limits.v_min = require_number(limits, "/limits", "v_min", 1.0);
  config.limits.v_max = require_number(limits, "/limits", "v_max", 15.0);
  config.limits.u_min = require_number(limits, "/limits", "u_min", -3.0);
  config.limits.u_max = require_number(limits, "/limits", "u_max", 3.0);
  if (!(config.limits.v_min > 0.0))
    throw ConfigError("/limits/v_min: must be > 0 (a vehicle may not stop inside "
                      "the control zone)");
  if (!(config.limits.v_min < config.limits.v_max))
    throw ConfigError("/limits/v_max: must exceed v_min");
  if (!(config.limits.u_min < 0.0))
    throw ConfigError("/limits/u_min: must be negative");
  if (!(config.limits.u_max > 0.0))
    throw ConfigError("/limits/u_max: must be positive");

  const json safety = root.value("safety", json::object());
  require_keys(safety, "/safety", {"tau_r", "tau_l", "allow_weak_headways"});
  config.params.tau_r = require_number(safety, "/safety", "tau_r", 4.0);
  config.params.tau_l = require_number(safety, "/safety", "tau_l", 2.0);
  config.allow_weak_headways = safety.value("allow_weak_headways", false);
  if (!(config.params.tau_l > 0.0))
    throw ConfigError("/safety/tau_l: must be positive");
  if (!gap_guarantee_holds(config.params)) {
    if (!config.allow_weak_headways)
      throw ConfigError("/safety/tau_r: must be at least 2*tau_l so consecutive "
                        "same-path crossings always leave a usable gap; set "
                        "allow_weak_headways to override");
    if (warnings)
      warnings->push_back("tau_r < 2*tau_l: the gap guarantee does not hold; "
                          "fallback feasibility is not assured");
  }

  const json arrivals = root.value("arrivals", json::object());
  require_keys(arrivals, "/arrivals",
               {"rate_per_path", "rate_overrides", "entry_speed", "duration"});
  config.arrivals.rate_per_path =
      require_number(arrivals, "/arrivals", "rate_per_path", 0.05);
  if (config.arrivals.rate_per_path < 0.0)
    throw ConfigError("/arrivals/rate_per_path: must be >= 0");
  if (arrivals.contains("rate_overrides")) {
    if (!arrivals["rate_overrides"].is_object())
      throw ConfigError("/arrivals/rate_overrides: must be an object");
    for (const auto &item : arrivals["rate_overrides"].items()) {
      int path_id = 0;
      try {
        path_id = std::stoi(item.key());
      } catch (...) {
        throw ConfigError("/arrivals/rate_overrides/" + item.key() +
                          ": key must be a path id");
      }
      if (!item.value().is_number() || item.value().get<double>() < 0.0)
        throw ConfigError("/arrivals/rate_overrides/" + item.key() +
                          ": must be a rate >= 0");
      if (!config.layout.has_path(path_id))
        throw ConfigError("/arrivals/rate_overrides/" + item.key() +
                          ": unknown path");
      config.arrivals.rate_overrides[path_id] = item.value().get<double>();
    }
  }
  if (arrivals.contains("entry_speed")) {
    const json &range = arrivals["entry_speed"];
    if (!range.is_array() || range.size() != 2 || !range[0].is_number() ||
        !range[1].is_number())
      throw ConfigError("/arrivals/entry_speed: must be [lo, hi]");
    config.arrivals.entry_speed_lo = range[0].get<double>();
    config.arrivals.entry_speed_hi = range[1].get<double>();
  }
  if (config.arrivals.entry_speed_lo > config.arrivals.entry_speed_hi ||
      config.arrivals.entry_speed_lo < config.limits.v_min ||
      config.arrivals.entry_speed_hi > config.limits.v_max)
    throw ConfigError("/arrivals/entry_speed: range must lie within [v_min, v_max]");
  config.duration = require_number(arrivals, "/arrivals", "duration", 120.0);
  if (!(config.duration > 0.0))
    throw ConfigError("/arrivals/duration: must be positive");

  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer())
      throw ConfigError("/seed: must be a non-negative integer");
    config.rng_seed = root["seed"].get<std::uint64_t>();
  }

  const json solver = root.value("solver", json::object());
  require_keys(solver, "/solver",
               {"scan_step", "position_step", "optimizer_max_iterations",
                "optimizer_tolerance"});
  config.planner.scan_step = require_number(solver, "/solver", "scan_step", 0.1);
  config.planner.position_step =
      require_number(solver, "/solver", "position_step", 0.5);
  config.planner.optimizer_max_iterations = static_cast<int>(
      require_number(solver, "/solver", "optimizer_max_iterations", 500));
  config.planner.optimizer_tolerance =
      require_number(solver, "/solver", "optimizer_tolerance", 1e-4);
  if (!(config.planner.scan_step > 0.0))
    throw ConfigError("/solver/scan_step: must be positive");
  if (!(config.planner.position_step > 0.0))
    throw ConfigError("/solver/position_step: must be positive");
  if (config.planner.optimizer_max_iterations <= 0)
    throw ConfigError("/solver/optimizer_max_iterations: must be positive");
  if (!(config.planner.optimizer_tolerance > 0.0))
    throw ConfigError("/solver/optimizer_tolerance: must be positive");

  config.sample_dt = require_number(root, "", "sample_dt", 0.1);
  if (!(config.sample_dt > 0.0)) throw ConfigError("/sample_dt: must be positive");

  config.validate();
  return config;
}

json config_echo(const SimConfig &config) {
  json overrides = json::object();
  for (const auto &[path_id, rate] : config.arrivals.rate_overrides)
    overrides[std::to_string(path_id)] = rate;
  return json{
      {"layout", layout_to_json(config.layout)},
      {"limits",
       {{"v_min", config.limits.v_min},
        {"v_max", config.limits.v_max},
        {"u_min", config.limits.u_min},
        {"u_max", config.limits.u_max}}},
      {"safety",
       {{"tau_r", config.params.tau_r},
        {"tau_l", config.params.tau_l},
        {"allow_weak_headways", config.allow_weak_headways}}},
      {"arrivals",
       {{"rate_per_path", config.arrivals.rate_per_path},
        {"rate_overrides", overrides},
        {"entry_speed",
         json::array({config.arrivals.entry_speed_lo, config.arrivals.entry_speed_hi})},
        {"duration", config.duration}}},
      {"seed", config.rng_seed},
      {"solver",
       {{"scan_step", config.planner.scan_step},
        {"position_step", config.planner.position_step},
        {"optimizer_max_iterations", config.planner.optimizer_max_iterations},
        {"optimizer_tolerance", config.planner.optimizer_tolerance}}},
      {"sample_dt", config.sample_dt}};
}

std::string export_trajectories(const OccupancyLedger &ledger, double sample_dt) {
  struct Row {
    int vehicle_id;
    int path_id;
    const PolyTrajectory *traj;
  };
  std::vector<Row> vehicles;
  for (const auto &[path_id, committed] : ledger.path_trajectories())
    for (const auto &c : committed)
      vehicles.push_back(Row{c.vehicle_id, path_id, &c.trajectory});
  std::sort(vehicles.begin(), vehicles.end(),
            [](const Row &a, const Row &b) { return a.vehicle_id < b.vehicle_id; });

  std::string csv = "t,vehicle_id,path_id,position_m,speed_mps,accel_mps2,jerk_mps3\n";
  for (const Row &row : vehicles) {
    const PolyTrajectory &traj = *row.traj;
    for (int k = 0;; ++k) {
      double t = traj.t_start + k * sample_dt;
      const bool last = t >= traj.t_end - 1e-9;
      if (last) t = traj.t_end;
      const State s = evaluate(traj, t);
      csv += fixed6(t);
      csv += ',';
      csv += std::to_string(row.vehicle_id);
      csv += ',';
      csv += std::to_string(row.path_id);
      csv += ',';
      csv += fixed6(s.position);
      csv += ',';
      csv += fixed6(s.speed);
      csv += ',';
      csv += fixed6(s.acceleration);
      csv += ',';
      csv += fixed6(s.jerk);
      csv += '\n';
      if (last) break;
    }
  }
  return csv;
}

json metrics_to_json(const Metrics &metrics) {
  return json{{"vehicles",
               {{"total", metrics.vehicles_total},
                {"cubic", metrics.vehicles_cubic},
                {"fallback", metrics.vehicles_fallback},
                {"rejected", metrics.vehicles_rejected}}},
              {"travel_time_s",
               {{"mean", metrics.mean_travel_time}, {"max", metrics.max_travel_time}}},
              {"energy_mean", metrics.mean_energy},
              {"jerk_integral_mean", metrics.mean_jerk_integral},
              {"audit_violations", metrics.audit_violations}};
}

json timing_to_json(const Metrics &metrics) {
  return json{{"latency_p50_s", metrics.latency_p50},
              {"latency_p95_s", metrics.latency_p95}};
}

json violations_to_json(const std::vector<Violation> &violations) {
  json list = json::array();
  for (const auto &v : violations)
    list.push_back({{"kind", to_string(v.kind)},
                    {"vehicles", v.vehicle_ids},
                    {"where", v.time_or_position},
                    {"margin", v.margin}});
  return json{{"violations", list}};
}

json plan_result_to_json(const PlanResult &result) {
  json crossings = json::array();
  for (const auto &[conflict_id, time] : result.crossing_times)
    crossings.push_back({{"conflict_id", conflict_id}, {"time", time}});
  json j{{"status", to_string(result.status)},
         {"crossing_times", crossings},
         {"diagnostics",
          {{"scan_steps", result.diagnostics.scan_steps},
           {"optimizer_evaluations", result.diagnostics.optimizer_evaluations},
           {"fallback_objective", result.diagnostics.fallback_objective},
           {"solve_seconds", result.diagnostics.solve_seconds},
           {"note", result.diagnostics.note}}}};
  if (result.trajectory) {
    j["exit_time"] = result.exit_time;
    std::vector<double> coeffs(result.trajectory->coefficients.begin(),
                               result.trajectory->coefficients.end());
    j["trajectory"] = {{"t_start", result.trajectory->t_start},
                       {"t_end", result.trajectory->t_end},
                       {"coefficients", coeffs}};
  } else {
    j["exit_time"] = nullptr;
    j["trajectory"] = nullptr;
  }
  return j;
}

json ledger_to_json(const OccupancyLedger &ledger) {
  struct Entry {
    int vehicle_id;
    int path_id;
    const PolyTrajectory *traj;
  };
  std::vector<Entry> entries;
  for (const auto &[path_id, committed] : ledger.path_trajectories())
    for (const auto &c : committed)
      entries.push_back(Entry{c.vehicle_id, path_id, &c.trajectory});
  std::sort(entries.begin(), entries.end(),
            [](const Entry &a, const Entry &b) { return a.vehicle_id < b.vehicle_id; });

  std::map<int, std::vector<std::pair<int, double>>> per_vehicle_crossings;
  for (const auto &[conflict_id, crossings] : ledger.crossings())
    for (const auto &c : crossings)
      per_vehicle_crossings[c.vehicle_id].emplace_back(conflict_id, c.time);

  json vehicles = json::array();
  for (const Entry &e : entries) {
    json crossings = json::array();
    auto it = per_vehicle_crossings.find(e.vehicle_id);
    if (it != per_vehicle_crossings.end()) {
      std::sort(it->second.begin(), it->second.end(),
                [](const auto &a, const auto &b) { return a.second < b.second; });
      for (const auto &[conflict_id, time] : it->second)
        crossings.push_back({{"conflict_id", conflict_id}, {"time", time}});
    }
    std::vector<double> coeffs(e.traj->coefficients.begin(),
                               e.traj->coefficients.end());
    vehicles.push_back({{"vehicle_id", e.vehicle_id},
                        {"path_id", e.path_id},
                        {"t_start", e.traj->t_start},
                        {"t_end", e.traj->t_end},
                        {"coefficients", coeffs},
                        {"crossings", crossings}});
  }
  return json{{"vehicles", vehicles}};
}

OccupancyLedger ledger_from_json(const json &j) {
  if (!j.is_object() || !j.contains("vehicles") || !j["vehicles"].is_array())
    throw ConfigError("ledger file must be an object with a 'vehicles' array");
  OccupancyLedger ledger;
  for (const auto &jv : j["vehicles"]) {
    const auto coeffs_json = jv.at("coefficients");
    Eigen::VectorXd coeffs(coeffs_json.size());
    for (std::size_t i = 0; i < coeffs_json.size(); ++i)
      coeffs[static_cast<Eigen::Index>(i)] = coeffs_json[i].get<double>();
    PolyTrajectory traj(coeffs, jv.at("t_start").get<double>(),
                        jv.at("t_end").get<double>());
    std::vector<std::pair<int, double>> crossings;
    for (const auto &jc : jv.value("crossings", json::array()))
      crossings.emplace_back(jc.at("conflict_id").get<int>(),
                             jc.at("time").get<double>());
    ledger.commit(jv.at("vehicle_id").get<int>(), jv.at("path_id").get<int>(),
                  std::move(traj), crossings);
  }
  return ledger;
}

namespace {

struct SampledVehicle {
  int vehicle_id = 0;
  int path_id = 0;
  std::vector<double> t, p, v, a;
};

/// Piecewise-linear time-at-position over the sampled rows.
double sampled_time_at(const SampledVehicle &veh, double position) {
  const auto it = std::lower_bound(veh.p.begin(), veh.p.end(), position);
  if (it == veh.p.begin()) return veh.t.front();
  if (it == veh.p.end()) return veh.t.back();
  const std::size_t hi = static_cast<std::size_t>(it - veh.p.begin());
  const std::size_t lo = hi - 1;
  const double span = veh.p[hi] - veh.p[lo];
  const double f = span > 0.0 ? (position - veh.p[lo]) / span : 0.0;
  return veh.t[lo] + f * (veh.t[hi] - veh.t[lo]);
}

}  // namespace

std::vector<Violation> audit_sampled_trajectories(const std::string &csv_text,
                                                  const SimConfig &config) {
  std::istringstream stream(csv_text);
  std::string line;
  if (!std::getline(stream, line))
    throw ConfigError("trajectory CSV is empty");

  std::map<int, SampledVehicle> vehicles;
  std::vector<int> order;
  while (std::getline(stream, line)) {
    if (line.empty()) continue;
    double fields[7];
    int field = 0;
    std::size_t start = 0;
    for (; field < 7; ++field) {
      const std::size_t comma = line.find(',', start);
      const std::string cell = line.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      try {
        fields[field] = std::stod(cell);
      } catch (...) {
        throw ConfigError("trajectory CSV: malformed row '" + line + "'");
      }
      if (comma == std::string::npos) {
        ++field;
        break;
      }
      start = comma + 1;
    }
    if (field != 7)
      throw ConfigError("trajectory CSV: expected 7 columns, got row '" + line + "'");
    const int vehicle_id = static_cast<int>(fields[1]);
    auto [it, inserted] = vehicles.try_emplace(vehicle_id);
    if (inserted) {
      it->second.vehicle_id = vehicle_id;
      it->second.path_id = static_cast<int>(fields[2]);
      order.push_back(vehicle_id);
    }
    it->second.t.push_back(fields[0]);
    it->second.p.push_back(fields[3]);
    it->second.v.push_back(fields[4]);
    it->second.a.push_back(fields[5]);
  }

  std::vector<Violation> violations;
  const double time_slack = config.sample_dt;  // one sample of slack
  const double bound_slack = 1e-5;             // covers the 6-decimal quantization

  // Per-sample bounds and monotonicity.
  for (int id : order) {
    const SampledVehicle &veh = vehicles[id];
    for (std::size_t i = 0; i < veh.t.size(); ++i) {
      if (veh.v[i] < config.limits.v_min - bound_slack ||
          veh.v[i] > config.limits.v_max + bound_slack) {
        const double excess = std::max(config.limits.v_min - veh.v[i],
                                       veh.v[i] - config.limits.v_max);
        violations.push_back(
            Violation{ViolationKind::SpeedBound, {id}, veh.t[i], excess});
      }
      if (veh.a[i] < config.limits.u_min - bound_slack ||
          veh.a[i] > config.limits.u_max + bound_slack) {
        const double excess = std::max(config.limits.u_min - veh.a[i],
                                       veh.a[i] - config.limits.u_max);
        violations.push_back(
            Violation{ViolationKind::AccelBound, {id}, veh.t[i], excess});
      }
      if (i > 0 && veh.p[i] <= veh.p[i - 1] - 1e-9)
        violations.push_back(Violation{ViolationKind::NonMonotone, {id}, veh.t[i],
                                       veh.p[i - 1] - veh.p[i]});
    }
  }

  // Rear-end between consecutive same-path vehicles (by first sample time).
  std::map<int, std::vector<const SampledVehicle *>> by_path;
  for (int id : order) by_path[vehicles[id].path_id].push_back(&vehicles[id]);
  for (auto &[path_id, list] : by_path) {
    std::sort(list.begin(), list.end(), [](const auto *a, const auto *b) {
      return a->t.front() < b->t.front();
    });
    for (std::size_t i = 1; i < list.size(); ++i) {
      const SampledVehicle &leader = *list[i - 1];
      const SampledVehicle &follower = *list[i];
      const double lo = std::max(leader.p.front(), follower.p.front());
      const double hi = std::min(leader.p.back(), follower.p.back());
      if (!(hi > lo)) continue;
      double worst_gap = std::numeric_limits<double>::infinity();
      double worst_pos = lo;
      double pos = lo;
      while (true) {
        const double gap =
            sampled_time_at(follower, pos) - sampled_time_at(leader, pos);
        if (gap < worst_gap) {
          worst_gap = gap;
          worst_pos = pos;
        }
        if (pos >= hi) break;
        pos = std::min(pos + config.planner.position_step, hi);
      }
      if (worst_gap < config.params.tau_r - time_slack)
        violations.push_back(Violation{ViolationKind::RearEnd,
                                       {follower.vehicle_id, leader.vehicle_id},
                                       worst_pos,
                                       config.params.tau_r - worst_gap});
    }
  }

  // Lateral separation at every conflict point.
  for (const auto &[conflict_id, participants] : config.layout.conflict_map()) {
    std::vector<std::pair<double, int>> crossings;
    for (const auto &participant : participants) {
      const auto it = by_path.find(participant.path_id);
      if (it == by_path.end()) continue;
      for (const SampledVehicle *veh : it->second) {
        if (participant.position < veh->p.front() ||
            participant.position > veh->p.back())
          continue;
        crossings.emplace_back(sampled_time_at(*veh, participant.position),
                               veh->vehicle_id);
      }
    }
    std::sort(crossings.begin(), crossings.end());
    for (std::size_t i = 1; i < crossings.size(); ++i) {
      const double gap = crossings[i].first - crossings[i - 1].first;
      if (gap < config.params.tau_l - time_slack)
        violations.push_back(Violation{ViolationKind::Lateral,
                                       {crossings[i - 1].second, crossings[i].second},
                                       crossings[i - 1].first,
                                       config.params.tau_l - gap});
    }
  }

  return violations;
}

RunBundle write_run_bundle(const std::string &out_dir, const SimConfig &config,
                           const RunOutput &output) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  RunBundle bundle;
  bundle.out_dir = out_dir;
  bundle.trajectories_path = (fs::path(out_dir) / "trajectories.csv").string();
  bundle.metrics_path = (fs::path(out_dir) / "metrics.json").string();
  bundle.violations_path = (fs::path(out_dir) / "violations.json").string();
  bundle.timing_path = (fs::path(out_dir) / "timing.json").string();
  bundle.run_path = (fs::path(out_dir) / "run.json").string();

  const auto write_file = [](const std::string &path, const std::string &content) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw ConfigError("cannot write " + path);
    file << content;
  };

  write_file(bundle.trajectories_path,
             export_trajectories(output.ledger, config.sample_dt));
  write_file(bundle.metrics_path, metrics_to_json(output.metrics).dump(2) + "\n");
  write_file(bundle.violations_path,
             violations_to_json(output.violations).dump(2) + "\n");
  write_file(bundle.timing_path, timing_to_json(output.metrics).dump(2) + "\n");

  json run_json{{"tool_version", kToolVersion},
                {"rng_seed", config.rng_seed},
                {"config", config_echo(config)},
                {"files",
                 {{"trajectories", "trajectories.csv"},
                  {"metrics", "metrics.json"},
                  {"violations", "violations.json"},
                  {"timing", "timing.json"}}}};
  write_file(bundle.run_path, run_json.dump(2) + "\n");
  return bundle;
}

}  // namespace cavsim
