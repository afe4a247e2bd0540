#ifndef CAVSIM_CONSTRAINTS_HPP
#define CAVSIM_CONSTRAINTS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cavsim/geometry.hpp"
#include "cavsim/trajectory.hpp"

namespace cavsim {

/// Safety headways. tau_r is the rear-end headway enforced at every common
/// position between a leader and its follower; tau_l is the minimum
/// crossing-time separation at a shared conflict point. The gap guarantee
/// tau_r >= 2*tau_l is enforced at config validation.
struct SafetyParams {
  double tau_r = 4.0;
  double tau_l = 2.0;
};

struct TimeWindow {
  double start = 0.0;
  double end = 0.0;
  double length() const { return end - start; }
};

enum class ViolationKind { RearEnd, Lateral, SpeedBound, AccelBound, NonMonotone };

const char *to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::vector<int> vehicle_ids;
  double time_or_position;  // seconds or meters, depending on kind
  double margin;            // amount by which the constraint failed
};

/// The coordinator's record of committed plans: crossing times per conflict
/// (sorted by time) and trajectories per path in FIFO entry order. Mutated
/// only by the single planning thread; audits may run on a snapshot.
class OccupancyLedger {
 public:
  struct Crossing {
    int vehicle_id;
    double time;
  };
  struct CommittedTrajectory {
    int vehicle_id;
    PolyTrajectory trajectory;
  };

  void commit(int vehicle_id, int path_id, PolyTrajectory trajectory,
              const std::vector<std::pair<int, double>> &crossing_times);

  const std::map<int, std::vector<Crossing>> &crossings() const { return crossings_; }
  const std::map<int, std::vector<CommittedTrajectory>> &path_trajectories() const {
    return path_trajectories_;
  }

  const std::vector<Crossing> *crossings_at(int conflict_id) const;
  const std::vector<CommittedTrajectory> *trajectories_on(int path_id) const;
  std::size_t vehicle_count() const { return vehicle_count_; }
  bool empty() const { return vehicle_count_ == 0; }

 private:
  std::map<int, std::vector<Crossing>> crossings_;
  std::map<int, std::vector<CommittedTrajectory>> path_trajectories_;
  std::size_t vehicle_count_ = 0;
};

/// Speed and acceleration bound check via exact extrema. A non-monotone
/// trajectory surfaces as a speed-bound violation since v_min > 0. Violations
/// are values, not errors.
std::optional<Violation> check_state_bounds(const PolyTrajectory &traj,
                                            const KinematicLimits &limits);

/// Rear-end headway check in the position domain: at every sampled common
/// position the follower must arrive at least tau_r after the leader.
std::optional<Violation> check_rear_end(const PolyTrajectory &follower,
                                        const PolyTrajectory &leader, double tau_r,
                                        double position_step = 0.5);

/// Maximal disjoint subintervals of the horizon not blocked by any committed
/// crossing at this conflict; a crossing at time t blocks [t-tau_l, t+tau_l].
/// Zero-length gaps are never materialized.
std::vector<TimeWindow> idle_windows(const OccupancyLedger &ledger, int conflict_id,
                                     const TimeWindow &horizon, double tau_l);

/// True iff tau_r >= 2*tau_l, the condition under which two consecutive
/// same-path crossings always leave a usable gap for a conflicting path.
bool gap_guarantee_holds(const SafetyParams &params);

/// Independent re-derivation of every safety property of a committed ledger:
/// state bounds per trajectory, rear-end between consecutive same-path
/// vehicles, and lateral separation at shared conflicts with crossing times
/// recomputed from the trajectories. Empty result = certified run.
std::vector<Violation> audit(const OccupancyLedger &ledger,
                             const IntersectionLayout &layout,
                             const SafetyParams &params, const KinematicLimits &limits,
                             double position_step = 0.5);

}  // namespace cavsim

#endif  // CAVSIM_CONSTRAINTS_HPP
