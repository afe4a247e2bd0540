#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cavsim/io.hpp"

namespace {

// Exit codes: 0 success/clean, 1 config or IO error, 2 domain outcome
// (infeasible plan, or violations found).
constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitDomain = 2;

std::string read_file(const std::string &path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw cavsim::ConfigError("cannot read " + path);
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

cavsim::SimConfig load_config(const std::string &path) {
  std::vector<std::string> warnings;
  cavsim::SimConfig config = cavsim::parse_config(read_file(path), &warnings);
  for (const auto &w : warnings) std::cerr << "warning: " << w << "\n";
  return config;
}

int cmd_simulate(const std::string &config_path, const std::string &out_dir,
                 std::optional<std::uint64_t> seed) {
  cavsim::SimConfig config = load_config(config_path);
  if (seed) config.rng_seed = *seed;
  const cavsim::RunOutput output = cavsim::run(config);
  const cavsim::RunBundle bundle = cavsim::write_run_bundle(out_dir, config, output);
  std::cout << "vehicles=" << output.metrics.vehicles_total
            << " cubic=" << output.metrics.vehicles_cubic
            << " fallback=" << output.metrics.vehicles_fallback
            << " rejected=" << output.metrics.vehicles_rejected
            << " audit_violations=" << output.metrics.audit_violations << "\n"
            << "wrote " << bundle.run_path << "\n";
  return output.metrics.audit_violations == 0 ? kExitOk : kExitDomain;
}

int cmd_plan(const std::string &config_path, int path_id, double t0, double v0,
             const std::string &occupancy_path, int vehicle_id) {
  const cavsim::SimConfig config = load_config(config_path);
  cavsim::OccupancyLedger ledger;
  if (!occupancy_path.empty())
    ledger = cavsim::ledger_from_json(nlohmann::json::parse(read_file(occupancy_path)));

  cavsim::PlanRequest req;
  req.vehicle_id = vehicle_id;
  req.path_id = path_id;
  req.entry = cavsim::EntryState{t0, 0.0, v0};
  req.limits = config.limits;
  req.params = config.params;

  const cavsim::PlanResult result =
      cavsim::plan(req, ledger, config.layout, config.planner);
  std::cout << cavsim::plan_result_to_json(result).dump(2) << "\n";
  return result.status == cavsim::PlanStatus::Infeasible ? kExitDomain : kExitOk;
}

int cmd_audit(const std::string &trajectories_path, const std::string &config_path) {
  const cavsim::SimConfig config = load_config(config_path);
  const auto violations =
      cavsim::audit_sampled_trajectories(read_file(trajectories_path), config);
  std::cout << cavsim::violations_to_json(violations).dump(2) << "\n";
  return violations.empty() ? kExitOk : kExitDomain;
}

int cmd_sweep(const std::string &config_path, const std::vector<double> &rates,
              const std::vector<std::uint64_t> &seeds, const std::string &out_dir) {
  const cavsim::SimConfig base = load_config(config_path);
  const auto rows = cavsim::sweep(base, rates, seeds);

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::string csv =
      "rate,seed,vehicles_total,vehicles_cubic,vehicles_fallback,vehicles_rejected,"
      "mean_travel_time_s,max_travel_time_s,energy_mean,jerk_integral_mean,"
      "audit_violations\n";
  bool all_clean = true;
  for (const auto &row : rows) {
    std::ostringstream cell_name;
    cell_name << "metrics_r" << row.rate << "_s" << row.seed << ".json";
    std::ofstream cell(fs::path(out_dir) / cell_name.str(), std::ios::binary);
    cell << cavsim::metrics_to_json(row.metrics).dump(2) << "\n";

    std::ostringstream line;
    line << row.rate << ',' << row.seed << ',' << row.metrics.vehicles_total << ','
         << row.metrics.vehicles_cubic << ',' << row.metrics.vehicles_fallback << ','
         << row.metrics.vehicles_rejected << ',' << row.metrics.mean_travel_time << ','
         << row.metrics.max_travel_time << ',' << row.metrics.mean_energy << ','
         << row.metrics.mean_jerk_integral << ',' << row.metrics.audit_violations
         << '\n';
    csv += line.str();
    if (row.metrics.audit_violations != 0) all_clean = false;
  }
  std::ofstream combined(fs::path(out_dir) / "sweep.csv", std::ios::binary);
  combined << csv;
  std::cout << "wrote " << (fs::path(out_dir) / "sweep.csv").string() << " ("
            << rows.size() << " cells)\n";
  return all_clean ? kExitOk : kExitDomain;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"signal-free intersection trajectory coordination"};
  app.require_subcommand(1);

  std::string config_path, out_dir, occupancy_path, trajectories_path;
  std::uint64_t seed_value = 0;
  bool seed_given = false;
  int path_id = 0, vehicle_id = 1;
  double t0 = 0.0, v0 = 10.0;
  std::vector<double> rates;
  std::vector<std::uint64_t> seeds;

  auto *simulate = app.add_subcommand("simulate", "run a full simulation");
  simulate->add_option("--config", config_path, "config JSON")->required();
  simulate->add_option("--out-dir", out_dir, "output directory")->required();
  simulate->add_option("--seed", seed_value, "override the config seed")
      ->each([&](const std::string &) { seed_given = true; });

  auto *plan = app.add_subcommand("plan", "plan a single vehicle");
  plan->add_option("--config", config_path, "config JSON")->required();
  plan->add_option("--path", path_id, "path id")->required();
  plan->add_option("--t0", t0, "entry time, s")->required();
  plan->add_option("--v0", v0, "entry speed, m/s")->required();
  plan->add_option("--occupancy", occupancy_path, "pre-loaded ledger JSON");
  plan->add_option("--vehicle-id", vehicle_id, "vehicle id to plan as");

  auto *audit = app.add_subcommand("audit", "re-check an exported run");
  audit->add_option("--trajectories", trajectories_path, "trajectories CSV")->required();
  audit->add_option("--config", config_path, "config JSON")->required();

  auto *sweep = app.add_subcommand("sweep", "run a rate x seed grid");
  sweep->add_option("--config", config_path, "config JSON")->required();
  sweep->add_option("--rates", rates, "arrival rates, vehicles/s")
      ->required()
      ->delimiter(',');
  sweep->add_option("--seeds", seeds, "rng seeds")->required()->delimiter(',');
  sweep->add_option("--out-dir", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed())
      return cmd_simulate(config_path, out_dir,
                          seed_given ? std::optional<std::uint64_t>(seed_value)
                                     : std::nullopt);
    if (plan->parsed())
      return cmd_plan(config_path, path_id, t0, v0, occupancy_path, vehicle_id);
    if (audit->parsed()) return cmd_audit(trajectories_path, config_path);
    if (sweep->parsed()) return cmd_sweep(config_path, rates, seeds, out_dir);
  } catch (const cavsim::Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
