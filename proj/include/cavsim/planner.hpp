#ifndef CAVSIM_PLANNER_HPP
#define CAVSIM_PLANNER_HPP

#include <optional>
#include <string>
#include <vector>

#include "cavsim/constraints.hpp"
#include "cavsim/geometry.hpp"
#include "cavsim/trajectory.hpp"

namespace cavsim {

/// One vehicle's planning input. Entry position is path-local (p0 = 0).
struct PlanRequest {
  int vehicle_id;
  int path_id;
  EntryState entry;
  KinematicLimits limits;
  SafetyParams params;
};

/// Crossing times at the path's conflict points (in position order) plus the
/// exit time; strictly increasing when valid.
struct NodeTimes {
  std::vector<double> crossing_times;
  double exit_time;
};

enum class PlanStatus { Cubic, QuarticFallback, Infeasible };

const char *to_string(PlanStatus status);

struct PlanDiagnostics {
  int scan_steps = 0;
  int optimizer_evaluations = 0;
  double fallback_objective = 0.0;
  double solve_seconds = 0.0;
  std::string note;
};

struct PlanResult {
  PlanStatus status = PlanStatus::Infeasible;
  std::optional<PolyTrajectory> trajectory;
  double exit_time = 0.0;
  std::vector<std::pair<int, double>> crossing_times;  // (conflict_id, time)
  PlanDiagnostics diagnostics;
};

struct PlannerOptions {
  double scan_step = 0.1;
  double position_step = 0.5;
  int optimizer_max_iterations = 500;
  double optimizer_tolerance = 1e-4;  // seconds, on the pattern size
};

/// The convex node-time box picked for the fallback: one idle window per
/// conflict point, the compact exit-time window, the midpoint seed and its
/// jerk objective.
struct ConvexSelection {
  std::vector<int> conflict_ids;
  std::vector<double> positions;  // conflict positions, then implicitly L for exit
  double path_length;
  std::vector<TimeWindow> windows;  // one per conflict, selection-shrunk
  TimeWindow tf_window;
  NodeTimes seed;
  double seed_objective;
};

struct FallbackPlan {
  NodeTimes times;
  PolyTrajectory trajectory;
  double objective;
  int evaluations;
};

/// Exit-time scan: walks candidate exit times from the kinematic lower bound
/// (tightened by the path leader's exit + tau_r) upward in fixed increments,
/// solves the cubic boundary-value problem per candidate and accepts the
/// first candidate that passes state bounds, the rear-end check against the
/// path leader, and lateral separation at every conflict. Infeasible is a
/// value, not an error.
PlanResult plan_cubic_scan(const PlanRequest &req, const OccupancyLedger &ledger,
                           const IntersectionLayout &layout, double step,
                           double position_step = 0.5);

/// Picks one idle window per conflict point by enumerating window
/// combinations with ordered midpoints, interpolating the implied polynomial
/// through entry, midpoints and an exit seed, and keeping the combination
/// with the smallest squared-jerk integral. Returns nothing when no ordered
/// combination exists.
std::optional<ConvexSelection> select_convex_sets(const PlanRequest &req,
                                                  const OccupancyLedger &ledger,
                                                  const IntersectionLayout &layout);

/// Minimizes the squared-jerk integral of the interpolant over the node-time
/// box from select_convex_sets: deterministic lattice prescan followed by a
/// fixed-schedule compass pattern search with penalty terms for ordering and
/// state-bound violations. Returns the best bounds-feasible iterate (never
/// worse than a feasible seed); nothing if no iterate satisfies the bounds.
std::optional<FallbackPlan> optimize_node_times(const PlanRequest &req,
                                                const ConvexSelection &selection,
                                                const PlannerOptions &options = {});

/// Two-level planning: the cubic exit-time scan first, then the interpolation
/// fallback when the scan is infeasible. On success the final trajectory is
/// re-verified against the full constraint set and committed to the ledger;
/// an Infeasible result leaves the ledger untouched.
PlanResult plan(const PlanRequest &req, OccupancyLedger &ledger,
                const IntersectionLayout &layout, const PlannerOptions &options = {});

}  // namespace cavsim

#endif  // CAVSIM_PLANNER_HPP
