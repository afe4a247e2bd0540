#include "cavsim/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cavsim {

namespace {

constexpr double kTimeSlack = 1e-9;  // shared slack for headway comparisons

}  // namespace

const char *to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::RearEnd: return "RearEnd";
    case ViolationKind::Lateral: return "Lateral";
    case ViolationKind::SpeedBound: return "SpeedBound";
    case ViolationKind::AccelBound: return "AccelBound";
    case ViolationKind::NonMonotone: return "NonMonotone";
  }
  return "Unknown";
}

void OccupancyLedger::commit(int vehicle_id, int path_id, PolyTrajectory trajectory,
                             const std::vector<std::pair<int, double>> &crossing_times) {
  for (const auto &[conflict_id, time] : crossing_times) {
    auto &list = crossings_[conflict_id];
    const auto pos = std::lower_bound(
        list.begin(), list.end(), time,
        [](const Crossing &c, double t) { return c.time < t; });
    list.insert(pos, Crossing{vehicle_id, time});
  }
  path_trajectories_[path_id].push_back(
      CommittedTrajectory{vehicle_id, std::move(trajectory)});
  ++vehicle_count_;
}

const std::vector<OccupancyLedger::Crossing> *OccupancyLedger::crossings_at(
    int conflict_id) const {
  const auto it = crossings_.find(conflict_id);
  return it == crossings_.end() ? nullptr : &it->second;
}

const std::vector<OccupancyLedger::CommittedTrajectory> *
OccupancyLedger::trajectories_on(int path_id) const {
  const auto it = path_trajectories_.find(path_id);
  return it == path_trajectories_.end() ? nullptr : &it->second;
}

std::optional<Violation> check_state_bounds(const PolyTrajectory &traj,
                                            const KinematicLimits &limits) {
  const ExtremaBounds b = extrema_bounds(traj);

  const double speed_excess =
      std::max(limits.v_min - b.v_lo, b.v_hi - limits.v_max);
  const double accel_excess =
      std::max(limits.u_min - b.a_lo, b.a_hi - limits.u_max);
  if (speed_excess <= kTimeSlack && accel_excess <= kTimeSlack) return std::nullopt;

  // Report whichever bound is broken harder.
  if (speed_excess >= accel_excess) {
    const bool low = limits.v_min - b.v_lo >= b.v_hi - limits.v_max;
    return Violation{ViolationKind::SpeedBound, {}, low ? b.t_v_lo : b.t_v_hi,
                     speed_excess};
  }
  const bool low = limits.u_min - b.a_lo >= b.a_hi - limits.u_max;
  return Violation{ViolationKind::AccelBound, {}, low ? b.t_a_lo : b.t_a_hi,
                   accel_excess};
}

std::optional<Violation> check_rear_end(const PolyTrajectory &follower,
                                        const PolyTrajectory &leader, double tau_r,
                                        double position_step) {
  const double f_lo = evaluate(follower, follower.t_start).position;
  const double f_hi = evaluate(follower, follower.t_end).position;
  const double l_lo = evaluate(leader, leader.t_start).position;
  const double l_hi = evaluate(leader, leader.t_end).position;

  const double span_lo = std::max(f_lo, l_lo);
  const double span_hi = std::min(f_hi, l_hi);
  if (!(span_hi > span_lo)) return std::nullopt;  // no common positions

  double worst_gap = std::numeric_limits<double>::infinity();
  double worst_position = span_lo;
  double p = span_lo;
  while (true) {
    const double gap = invert_position(follower, p) - invert_position(leader, p);
    if (gap < worst_gap) {
      worst_gap = gap;
      worst_position = p;
    }
    if (p >= span_hi) break;
    p = std::min(p + position_step, span_hi);
  }

  if (worst_gap < tau_r - kTimeSlack)
    return Violation{ViolationKind::RearEnd, {}, worst_position, tau_r - worst_gap};
  return std::nullopt;
}

std::vector<TimeWindow> idle_windows(const OccupancyLedger &ledger, int conflict_id,
                                     const TimeWindow &horizon, double tau_l) {
  std::vector<TimeWindow> blocked;
  if (const auto *crossings = ledger.crossings_at(conflict_id)) {
    for (const auto &c : *crossings)
      blocked.push_back(TimeWindow{c.time - tau_l, c.time + tau_l});
  }
  std::sort(blocked.begin(), blocked.end(),
            [](const TimeWindow &a, const TimeWindow &b) { return a.start < b.start; });

  std::vector<TimeWindow> merged;
  for (const auto &b : blocked) {
    if (!merged.empty() && b.start <= merged.back().end + kTimeSlack)
      merged.back().end = std::max(merged.back().end, b.end);
    else
      merged.push_back(b);
  }

  std::vector<TimeWindow> idle;
  double cursor = horizon.start;
  for (const auto &b : merged) {
    if (b.end <= horizon.start || b.start >= horizon.end) continue;
    if (b.start - cursor > kTimeSlack) idle.push_back(TimeWindow{cursor, b.start});
    cursor = std::max(cursor, b.end);
  }
  if (horizon.end - cursor > kTimeSlack) idle.push_back(TimeWindow{cursor, horizon.end});
  return idle;
}

bool gap_guarantee_holds(const SafetyParams &params) {
  return params.tau_r >= 2.0 * params.tau_l;
}

std::vector<Violation> audit(const OccupancyLedger &ledger,
                             const IntersectionLayout &layout,
                             const SafetyParams &params, const KinematicLimits &limits,
                             double position_step) {
  std::vector<Violation> violations;

  // Per-trajectory state bounds.
  for (const auto &[path_id, vehicles] : ledger.path_trajectories()) {
    for (const auto &committed : vehicles) {
      if (auto v = check_state_bounds(committed.trajectory, limits)) {
        v->vehicle_ids = {committed.vehicle_id};
        violations.push_back(*v);
      }
    }
  }

  // Rear-end between consecutive same-path vehicles (entry order).
  for (const auto &[path_id, vehicles] : ledger.path_trajectories()) {
    for (std::size_t i = 1; i < vehicles.size(); ++i) {
      if (auto v = check_rear_end(vehicles[i].trajectory, vehicles[i - 1].trajectory,
                                  params.tau_r, position_step)) {
        v->vehicle_ids = {vehicles[i].vehicle_id, vehicles[i - 1].vehicle_id};
        violations.push_back(*v);
      }
    }
  }

  // Lateral separation at every shared conflict, with crossing times
  // recomputed from the committed trajectories rather than the ledger record.
  for (const auto &[conflict_id, participants] : layout.conflict_map()) {
    std::vector<OccupancyLedger::Crossing> recomputed;
    for (const auto &participant : participants) {
      const auto *vehicles = ledger.trajectories_on(participant.path_id);
      if (!vehicles) continue;
      for (const auto &committed : *vehicles)
        recomputed.push_back(OccupancyLedger::Crossing{
            committed.vehicle_id,
            invert_position(committed.trajectory, participant.position)});
    }
    std::sort(recomputed.begin(), recomputed.end(),
              [](const auto &a, const auto &b) { return a.time < b.time; });
    for (std::size_t i = 1; i < recomputed.size(); ++i) {
      const double gap = recomputed[i].time - recomputed[i - 1].time;
      if (gap < params.tau_l - kTimeSlack)
        violations.push_back(Violation{
            ViolationKind::Lateral,
            {recomputed[i - 1].vehicle_id, recomputed[i].vehicle_id},
            recomputed[i - 1].time,
            params.tau_l - gap});
    }
  }

  return violations;
}

}  // namespace cavsim
