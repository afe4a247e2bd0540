#include "cavsim/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "cavsim/polynomial.hpp"

namespace cavsim {

namespace {

constexpr double kTimeSlack = 1e-9;
constexpr double kOrderMargin = 1e-3;   // strict node ordering, protects conditioning
constexpr double kWindowMargin = 1e-6;  // keeps committed crossings strictly inside windows
constexpr double kHugeObjective = 1e30;

bool lateral_ok(double crossing_time, const std::vector<OccupancyLedger::Crossing> *list,
                double tau_l) {
  if (!list || list->empty()) return true;
  const auto it = std::lower_bound(
      list->begin(), list->end(), crossing_time,
      [](const OccupancyLedger::Crossing &c, double t) { return c.time < t; });
  if (it != list->end() && it->time - crossing_time < tau_l - kTimeSlack) return false;
  if (it != list->begin() && crossing_time - std::prev(it)->time < tau_l - kTimeSlack)
    return false;
  return true;
}

const PolyTrajectory *path_leader(const OccupancyLedger &ledger, int path_id) {
  const auto *vehicles = ledger.trajectories_on(path_id);
  if (!vehicles || vehicles->empty()) return nullptr;
  return &vehicles->back().trajectory;
}

/// Interpolation with a pre-shift so the first node is at least 1 s: entry
/// times at or near zero would otherwise violate the positive-node
/// requirement. The shift is undone on the coefficients, so the returned
/// interpolant is identical.
PolyTrajectory interpolate_nodes(const std::vector<TimePosition> &nodes) {
  if (nodes.front().t >= 1.0) return interpolate_vandermonde(nodes);
  const double delta = 1.0 - nodes.front().t;
  std::vector<TimePosition> shifted = nodes;
  for (auto &n : shifted) n.t += delta;
  const PolyTrajectory traj = interpolate_vandermonde(shifted);
  return PolyTrajectory(poly_taylor_shift(traj.coefficients, delta),
                        nodes.front().t, nodes.back().t);
}

struct SeedCandidate {
  NodeTimes times;
  PolyTrajectory trajectory;
  double objective;
};

/// Midpoint seed for a fixed window combination: crossing seeds are the
/// window midpoints, the exit seed is the tf-window midpoint clamped above
/// the last crossing. Fails when the midpoints cannot be ordered.
std::optional<SeedCandidate> build_seed(const PlanRequest &req,
                                        const std::vector<TimeWindow> &windows,
                                        const TimeWindow &tf_window,
                                        const std::vector<double> &positions,
                                        double path_length) {
  NodeTimes times;
  double prev = req.entry.t0;
  for (const auto &w : windows) {
    const double mid = 0.5 * (w.start + w.end);
    if (!(mid >= prev + kOrderMargin)) return std::nullopt;
    times.crossing_times.push_back(mid);
    prev = mid;
  }
  const double tf_floor = std::max(tf_window.start, prev + kOrderMargin);
  if (tf_floor > tf_window.end) return std::nullopt;
  times.exit_time =
      std::min(std::max(0.5 * (tf_window.start + tf_window.end), tf_floor),
               tf_window.end);

  std::vector<TimePosition> nodes;
  nodes.push_back(TimePosition{req.entry.t0, req.entry.p0});
  for (std::size_t i = 0; i < windows.size(); ++i)
    nodes.push_back(TimePosition{times.crossing_times[i], positions[i]});
  nodes.push_back(TimePosition{times.exit_time, path_length});

  try {
    PolyTrajectory traj = interpolate_nodes(nodes);
    const double objective = squared_jerk_integral(traj);
    return SeedCandidate{std::move(times), std::move(traj), objective};
  } catch (const Error &) {
    return std::nullopt;
  }
}

}  // namespace

const char *to_string(PlanStatus status) {
  switch (status) {
    case PlanStatus::Cubic: return "Cubic";
    case PlanStatus::QuarticFallback: return "QuarticFallback";
    case PlanStatus::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

PlanResult plan_cubic_scan(const PlanRequest &req, const OccupancyLedger &ledger,
                           const IntersectionLayout &layout, double step,
                           double position_step) {
  if (!(step > 0.0)) throw std::invalid_argument("scan step must be positive");
  const PathDescriptor &path = layout.path(req.path_id);
  const auto crossings = conflicting_crossings(layout, req.path_id);
  const ExitRange range = feasible_exit_range(req.entry, req.limits, path.length);
  const PolyTrajectory *leader = path_leader(ledger, req.path_id);

  double scan_start = range.earliest;
  if (leader) scan_start = std::max(scan_start, leader->t_end + req.params.tau_r);

  PlanResult result;
  int steps = 0;
  for (int k = 0;; ++k) {
    const double t_f = scan_start + k * step;
    if (t_f > range.latest + kTimeSlack) break;
    ++steps;

    PolyTrajectory traj;
    try {
      traj = solve_cubic_bvp(req.entry, path.length, t_f);
    } catch (const SingularSystem &) {
      continue;
    }
    if (check_state_bounds(traj, req.limits)) continue;
    if (leader && check_rear_end(traj, *leader, req.params.tau_r, position_step))
      continue;

    std::vector<std::pair<int, double>> crossing_times;
    bool clear = true;
    for (const auto &c : crossings) {
      const double t_c = invert_position(traj, c.own_position);
      if (!lateral_ok(t_c, ledger.crossings_at(c.conflict_id), req.params.tau_l)) {
        clear = false;
        break;
      }
      crossing_times.emplace_back(c.conflict_id, t_c);
    }
    if (!clear) continue;

    result.status = PlanStatus::Cubic;
    result.trajectory = std::move(traj);
    result.exit_time = t_f;
    result.crossing_times = std::move(crossing_times);
    break;
  }
  result.diagnostics.scan_steps = steps;
  return result;
}

std::optional<ConvexSelection> select_convex_sets(const PlanRequest &req,
                                                  const OccupancyLedger &ledger,
                                                  const IntersectionLayout &layout) {
  const PathDescriptor &path = layout.path(req.path_id);
  const auto crossings = conflicting_crossings(layout, req.path_id);
  const ExitRange range = feasible_exit_range(req.entry, req.limits, path.length);
  const PolyTrajectory *leader = path_leader(ledger, req.path_id);

  double tf_lo = range.earliest;
  if (leader) tf_lo = std::max(tf_lo, leader->t_end + req.params.tau_r);
  if (tf_lo > range.latest) return std::nullopt;
  const TimeWindow tf_window{tf_lo, range.latest};

  // Idle windows per conflict over the kinematically reachable arrival range,
  // shrunk a hair so committed crossings sit strictly inside.
  std::vector<std::vector<TimeWindow>> window_sets;
  for (const auto &c : crossings) {
    const ExitRange reach = feasible_exit_range(req.entry, req.limits, c.own_position);
    std::vector<TimeWindow> shrunk;
    for (const auto &w : idle_windows(ledger, c.conflict_id,
                                      TimeWindow{reach.earliest, reach.latest},
                                      req.params.tau_l)) {
      const TimeWindow s{w.start + kWindowMargin, w.end - kWindowMargin};
      if (s.length() > 0.0) shrunk.push_back(s);
    }
    if (shrunk.empty()) return std::nullopt;
    window_sets.push_back(std::move(shrunk));
  }

  std::vector<double> positions;
  std::vector<int> conflict_ids;
  for (const auto &c : crossings) {
    positions.push_back(c.own_position);
    conflict_ids.push_back(c.conflict_id);
  }

  // Enumerate one window per conflict, lexicographically; keep the ordered
  // combination whose midpoint interpolant has the smallest jerk objective.
  std::optional<ConvexSelection> best;
  std::vector<std::size_t> pick(window_sets.size(), 0);
  while (true) {
    std::vector<TimeWindow> combo;
    for (std::size_t i = 0; i < window_sets.size(); ++i)
      combo.push_back(window_sets[i][pick[i]]);

    if (auto seed = build_seed(req, combo, tf_window, positions, path.length)) {
      if (!best || seed->objective < best->seed_objective) {
        ConvexSelection sel;
        sel.conflict_ids = conflict_ids;
        sel.positions = positions;
        sel.path_length = path.length;
        sel.windows = combo;
        sel.tf_window = tf_window;
        sel.seed = seed->times;
        sel.seed_objective = seed->objective;
        best = std::move(sel);
      }
    }

    // odometer increment
    std::size_t digit = 0;
    for (; digit < pick.size(); ++digit) {
      if (++pick[digit] < window_sets[digit].size()) break;
      pick[digit] = 0;
    }
    if (digit == pick.size()) break;  // also covers zero conflicts
  }
  return best;
}

std::optional<FallbackPlan> optimize_node_times(const PlanRequest &req,
                                                const ConvexSelection &selection,
                                                const PlannerOptions &options) {
  const std::size_t dims = selection.windows.size() + 1;
  std::vector<double> lo(dims), hi(dims);
  for (std::size_t i = 0; i + 1 < dims; ++i) {
    lo[i] = selection.windows[i].start;
    hi[i] = selection.windows[i].end;
  }
  lo[dims - 1] = selection.tf_window.start;
  hi[dims - 1] = selection.tf_window.end;

  int evaluations = 0;
  std::optional<FallbackPlan> best_feasible;

  const auto evaluate_point = [&](const std::vector<double> &x) -> double {
    ++evaluations;
    double ordering_deficit = 0.0;
    double prev = req.entry.t0;
    bool increasing = true;
    for (double t : x) {
      ordering_deficit += std::max(0.0, prev + kOrderMargin - t);
      if (!(t > prev)) increasing = false;
      prev = t;
    }
    if (!increasing) return kHugeObjective + 1e6 * ordering_deficit;

    std::vector<TimePosition> nodes;
    nodes.push_back(TimePosition{req.entry.t0, req.entry.p0});
    for (std::size_t i = 0; i + 1 < dims; ++i)
      nodes.push_back(TimePosition{x[i], selection.positions[i]});
    nodes.push_back(TimePosition{x[dims - 1], selection.path_length});

    PolyTrajectory traj;
    try {
      traj = interpolate_nodes(nodes);
    } catch (const Error &) {
      return kHugeObjective;
    }

    const double raw = squared_jerk_integral(traj);
    const ExtremaBounds b = extrema_bounds(traj);
    const double bound_excess =
        std::max(0.0, req.limits.v_min - b.v_lo) +
        std::max(0.0, b.v_hi - req.limits.v_max) +
        std::max(0.0, req.limits.u_min - b.a_lo) +
        std::max(0.0, b.a_hi - req.limits.u_max);

    if (ordering_deficit <= 0.0 && !check_state_bounds(traj, req.limits)) {
      if (!best_feasible || raw < best_feasible->objective) {
        NodeTimes times;
        times.crossing_times.assign(x.begin(), x.end() - 1);
        times.exit_time = x.back();
        best_feasible = FallbackPlan{std::move(times), traj, raw, 0};
      }
    }
    return raw + 1e6 * (ordering_deficit + bound_excess);
  };

  // Seed plus a deterministic lattice prescan over the box; the compass
  // search then runs from the few best prescan points (box dimensions differ
  // by an order of magnitude, and a single start can settle in the wrong
  // basin of the curved jerk valley).
  std::vector<double> seed_point = selection.seed.crossing_times;
  seed_point.push_back(selection.seed.exit_time);

  // One start per exit-time slice of the lattice, plus the seed: the jerk
  // objective often carries one valley per exit-time regime, and a start
  // chosen by value alone can leave the better regime unexplored.
  std::vector<std::pair<double, std::vector<double>>> starts;
  starts.emplace_back(evaluate_point(seed_point), seed_point);

  const int lattice_points = dims <= 4 ? 7 : 3;
  std::vector<std::pair<double, std::vector<double>>> slice_best(
      lattice_points, {kHugeObjective + 1.0, {}});
  std::vector<int> odo(dims, 0);
  while (true) {
    std::vector<double> x(dims);
    for (std::size_t d = 0; d < dims; ++d) {
      const double f = static_cast<double>(odo[d]) / (lattice_points - 1);
      x[d] = lo[d] + f * (hi[d] - lo[d]);
    }
    const double value = evaluate_point(x);
    auto &best_in_slice = slice_best[odo[dims - 1]];
    if (value < best_in_slice.first) best_in_slice = {value, x};
    std::size_t digit = 0;
    for (; digit < dims; ++digit) {
      if (++odo[digit] < lattice_points) break;
      odo[digit] = 0;
    }
    if (digit == dims) break;
  }
  for (auto &candidate : slice_best)
    if (!candidate.second.empty()) starts.push_back(std::move(candidate));
  std::stable_sort(starts.begin(), starts.end(),
                   [](const auto &a, const auto &b) { return a.first < b.first; });

  // Pattern search over the first `active_dims` coordinates with a fixed
  // halving schedule. Poll directions: coordinate axes, pairwise diagonals,
  // and the all-ones direction -- axis polls alone crawl in the curved valley
  // the jerk objective forms when all node times shift together.
  const auto run_pattern = [&](std::vector<double> x, std::size_t active_dims) {
    std::vector<std::vector<double>> directions;
    for (std::size_t d = 0; d < active_dims; ++d) {
      std::vector<double> e(dims, 0.0);
      e[d] = 1.0;
      directions.push_back(e);
    }
    for (std::size_t a = 0; a < active_dims; ++a)
      for (std::size_t b = a + 1; b < active_dims; ++b) {
        std::vector<double> e(dims, 0.0);
        e[a] = 1.0;
        e[b] = 1.0;
        directions.push_back(e);
        e[b] = -1.0;
        directions.push_back(e);
      }
    if (active_dims > 1) {
      std::vector<double> e(dims, 0.0);
      for (std::size_t d = 0; d < active_dims; ++d) e[d] = 1.0;
      directions.push_back(e);
    }

    double fx = evaluate_point(x);
    std::vector<double> delta(dims);
    double delta_max = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
      delta[d] = std::max((hi[d] - lo[d]) / 4.0, options.optimizer_tolerance);
      delta_max = std::max(delta_max, delta[d]);
    }
    for (int iter = 0; iter < options.optimizer_max_iterations &&
                       delta_max >= options.optimizer_tolerance; ++iter) {
      bool improved = false;
      std::vector<double> best_point;
      double best_value = fx;
      for (const auto &direction : directions) {
        for (double sign : {1.0, -1.0}) {
          std::vector<double> y = x;
          bool moved = false;
          for (std::size_t d = 0; d < dims; ++d) {
            if (direction[d] == 0.0) continue;
            y[d] = std::min(std::max(y[d] + sign * direction[d] * delta[d], lo[d]),
                            hi[d]);
            if (y[d] != x[d]) moved = true;
          }
          if (!moved) continue;
          const double fy = evaluate_point(y);
          if (fy < best_value) {
            best_value = fy;
            best_point = y;
            improved = true;
          }
        }
      }
      if (improved) {
        x = std::move(best_point);
        fx = best_value;
      } else {
        delta_max = 0.0;
        for (std::size_t d = 0; d < dims; ++d) {
          delta[d] *= 0.5;
          delta_max = std::max(delta_max, delta[d]);
        }
      }
    }
    return x;
  };

  const std::size_t restarts = std::min<std::size_t>(1 + lattice_points, starts.size());
  for (std::size_t s = 0; s < restarts; ++s) {
    if (starts[s].first >= kHugeObjective) break;
    // Two phases: first center the crossing times with the exit time frozen,
    // then release every dimension. A full-dimensional walk from an
    // off-center start tends to ride the valley toward the wrong exit-time
    // rail and settle there.
    std::vector<double> x = starts[s].second;
    if (dims > 1) x = run_pattern(std::move(x), dims - 1);
    run_pattern(std::move(x), dims);
  }

  if (best_feasible) best_feasible->evaluations = evaluations;
  return best_feasible;
}

namespace {

/// One rear-end tightening round: raise every node window's lower edge to the
/// leader's arrival at that position plus tau_r, and rebuild the seed.
std::optional<ConvexSelection> tighten_selection(const PlanRequest &req,
                                                 const ConvexSelection &selection,
                                                 const PolyTrajectory &leader) {
  ConvexSelection tightened = selection;
  const double leader_entry = evaluate(leader, leader.t_start).position;
  const double leader_exit = evaluate(leader, leader.t_end).position;
  for (std::size_t i = 0; i < tightened.windows.size(); ++i) {
    const double pos = tightened.positions[i];
    if (pos < leader_entry || pos > leader_exit) continue;
    const double floor = invert_position(leader, pos) + req.params.tau_r;
    tightened.windows[i].start = std::max(tightened.windows[i].start, floor);
    if (tightened.windows[i].start > tightened.windows[i].end) return std::nullopt;
  }
  auto seed = build_seed(req, tightened.windows, tightened.tf_window,
                         tightened.positions, tightened.path_length);
  if (!seed) return std::nullopt;
  tightened.seed = seed->times;
  tightened.seed_objective = seed->objective;
  return tightened;
}

}  // namespace

PlanResult plan(const PlanRequest &req, OccupancyLedger &ledger,
                const IntersectionLayout &layout, const PlannerOptions &options) {
  req.limits.validate();
  if (req.entry.v0 < req.limits.v_min || req.entry.v0 > req.limits.v_max)
    throw ConfigError("entry speed " + std::to_string(req.entry.v0) +
                      " outside kinematic limits");
  if (std::abs(req.entry.p0) > 1e-12)
    throw std::invalid_argument("entry position must be path-local (p0 = 0)");

  const auto clock_start = std::chrono::steady_clock::now();
  PlanResult result = plan_cubic_scan(req, ledger, layout, options.scan_step,
                                      options.position_step);

  const PolyTrajectory *leader = path_leader(ledger, req.path_id);

  if (result.status == PlanStatus::Infeasible) {
    if (const auto selection = select_convex_sets(req, ledger, layout)) {
      auto fallback = optimize_node_times(req, *selection, options);
      if (fallback) result.diagnostics.optimizer_evaluations = fallback->evaluations;
      if (fallback && leader &&
          check_rear_end(fallback->trajectory, *leader, req.params.tau_r,
                         options.position_step)) {
        fallback.reset();
        if (const auto tightened = tighten_selection(req, *selection, *leader)) {
          fallback = optimize_node_times(req, *tightened, options);
          if (fallback) {
            result.diagnostics.optimizer_evaluations += fallback->evaluations;
            if (check_rear_end(fallback->trajectory, *leader, req.params.tau_r,
                               options.position_step))
              fallback.reset();
          }
        }
      }
      if (fallback) {
        result.status = PlanStatus::QuarticFallback;
        result.trajectory = fallback->trajectory;
        result.exit_time = fallback->times.exit_time;
        result.diagnostics.fallback_objective = fallback->objective;
      } else {
        result.diagnostics.note = "fallback found no bounds-feasible node times";
      }
    } else {
      result.diagnostics.note = "fallback found no ordered window combination";
    }
  }

  if (result.status != PlanStatus::Infeasible) {
    // Defensive re-check of the final trajectory against the full constraint
    // set, with crossing times re-derived by inversion; commit on success.
    const PolyTrajectory &traj = *result.trajectory;
    bool ok = !check_state_bounds(traj, req.limits);
    if (ok && leader &&
        check_rear_end(traj, *leader, req.params.tau_r, options.position_step))
      ok = false;
    std::vector<std::pair<int, double>> crossing_times;
    if (ok) {
      for (const auto &c : conflicting_crossings(layout, req.path_id)) {
        const double t_c = invert_position(traj, c.own_position);
        if (!lateral_ok(t_c, ledger.crossings_at(c.conflict_id), req.params.tau_l)) {
          ok = false;
          break;
        }
        crossing_times.emplace_back(c.conflict_id, t_c);
      }
    }
    if (ok) {
      result.crossing_times = crossing_times;
      ledger.commit(req.vehicle_id, req.path_id, traj, crossing_times);
    } else {
      result = PlanResult{};
      result.diagnostics.note = "final verification rejected the candidate plan";
    }
  }

  result.diagnostics.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start)
          .count();
  return result;
}

}  // namespace cavsim
