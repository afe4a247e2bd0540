#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cavsim/constraints.hpp"
#include "cavsim/rng.hpp"
#include "oracles.hpp"

using namespace cavsim;

namespace {

const KinematicLimits kLimits{1.0, 15.0, -3.0, 3.0};

PolyTrajectory make_traj(std::initializer_list<double> ascending, double t0, double t1) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(ascending.size()));
  Eigen::Index i = 0;
  for (double v : ascending) c[i++] = v;
  return PolyTrajectory(c, t0, t1);
}

}  // namespace

TEST_CASE("check_state_bounds: examples") {
  const PolyTrajectory cruise = make_traj({0.0, 10.0, 0.0, 0.0}, 0.0, 10.0);
  CHECK(!check_state_bounds(cruise, kLimits));

  // v peaks at 13.75 by the exit; margin against v_max = 12 is 1.75.
  const PolyTrajectory cubic = solve_cubic_bvp(EntryState{0.0, 0.0, 10.0}, 100.0, 8.0);
  KinematicLimits tight = kLimits;
  tight.v_max = 12.0;
  const auto speed = check_state_bounds(cubic, tight);
  REQUIRE(speed.has_value());
  CHECK(speed->kind == ViolationKind::SpeedBound);
  CHECK(speed->margin == doctest::Approx(1.75).epsilon(1e-9));

  // a peaks at 12 on the pure quartic; the accel excess (9) dominates the
  // simultaneous v_min shortfall (1), so AccelBound is reported.
  const PolyTrajectory quartic = make_traj({0.0, 0.0, 0.0, 0.0, 1.0}, 0.0, 1.0);
  const auto accel = check_state_bounds(quartic, kLimits);
  REQUIRE(accel.has_value());
  CHECK(accel->kind == ViolationKind::AccelBound);
  CHECK(accel->margin == doctest::Approx(9.0).epsilon(1e-9));
}

TEST_CASE("check_rear_end: translated profiles") {
  const PolyTrajectory leader = make_traj({0.0, 10.0}, 0.0, 10.0);
  const PolyTrajectory follower = make_traj({-30.0, 10.0}, 3.0, 13.0);

  CHECK(!check_rear_end(follower, leader, 2.0));

  const auto violation = check_rear_end(follower, leader, 4.0);
  REQUIRE(violation.has_value());
  CHECK(violation->kind == ViolationKind::RearEnd);
  CHECK(violation->margin == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("check_rear_end: agrees with a dense sampling oracle") {
  // Follower planned to exit exactly tau_r after the leader.
  const double tau_r = 4.0;
  const PolyTrajectory leader = make_traj({0.0, 10.0}, 0.0, 10.0);
  const PolyTrajectory follower =
      solve_cubic_bvp(EntryState{tau_r, 0.0, 10.0}, 100.0, 10.0 + tau_r);

  const auto coarse = check_rear_end(follower, leader, tau_r, 0.5);
  double min_gap = 1e300;
  for (double p = 0.0; p <= 100.0; p += 0.01)
    min_gap = std::min(min_gap,
                       invert_position(follower, p) - invert_position(leader, p));
  if (min_gap >= tau_r - 1e-9) {
    CHECK(!coarse);
  } else {
    CHECK(coarse.has_value());
  }
  CHECK(min_gap == doctest::Approx(tau_r).epsilon(1e-6));
}

TEST_CASE("check_rear_end: resolution stability on planner-style pairs") {
  const CounterRng rng(55);
  for (int i = 0; i < 25; ++i) {
    const double v_lead = rng.uniform(1, i, 6.0, 12.0);
    const double v_follow = rng.uniform(2, i, 6.0, 12.0);
    const double gap = rng.uniform(3, i, 4.0, 8.0);
    const PolyTrajectory leader =
        solve_cubic_bvp(EntryState{0.0, 0.0, v_lead}, 100.0, 100.0 / v_lead);
    const PolyTrajectory follower = solve_cubic_bvp(
        EntryState{gap, 0.0, v_follow}, 100.0, gap + 100.0 / v_follow);
    const auto at_half = check_rear_end(follower, leader, 4.0, 0.5);
    const auto at_quarter = check_rear_end(follower, leader, 4.0, 0.25);
    if (!at_half) {
      // Halving the step must not surface a violation beyond fine-sampling noise.
      if (at_quarter) CHECK(at_quarter->margin <= 1e-6);
    } else {
      CHECK(at_quarter.has_value());
    }
  }
}

TEST_CASE("idle_windows: interval complement examples") {
  OccupancyLedger ledger;
  const PolyTrajectory t1 = oracles::constant_speed(5.0, 10.0, 100.0);
  const PolyTrajectory t2 = oracles::constant_speed(15.0, 10.0, 100.0);
  ledger.commit(1, 1, t1, {{0, 10.0}});
  ledger.commit(2, 1, t2, {{0, 20.0}});

  const auto windows = idle_windows(ledger, 0, TimeWindow{0.0, 30.0}, 2.0);
  REQUIRE(windows.size() == 3);
  CHECK(windows[0].start == doctest::Approx(0.0));
  CHECK(windows[0].end == doctest::Approx(8.0));
  CHECK(windows[1].start == doctest::Approx(12.0));
  CHECK(windows[1].end == doctest::Approx(18.0));
  CHECK(windows[2].start == doctest::Approx(22.0));
  CHECK(windows[2].end == doctest::Approx(30.0));

  // Empty ledger: the whole horizon.
  OccupancyLedger empty;
  const auto whole = idle_windows(empty, 0, TimeWindow{5.0, 50.0}, 2.0);
  REQUIRE(whole.size() == 1);
  CHECK(whole[0].start == doctest::Approx(5.0));
  CHECK(whole[0].end == doctest::Approx(50.0));
}

TEST_CASE("idle_windows: overlapping blocks merge and empty gaps are dropped") {
  OccupancyLedger ledger;
  ledger.commit(1, 1, oracles::constant_speed(5.0, 10.0, 100.0), {{0, 10.0}});
  ledger.commit(2, 1, oracles::constant_speed(8.0, 10.0, 100.0), {{0, 13.0}});
  ledger.commit(3, 1, oracles::constant_speed(11.0, 10.0, 100.0), {{0, 16.0}});

  const auto windows = idle_windows(ledger, 0, TimeWindow{0.0, 20.0}, 2.0);
  REQUIRE(windows.size() == 2);
  CHECK(windows[0].start == doctest::Approx(0.0));
  CHECK(windows[0].end == doctest::Approx(8.0));
  CHECK(windows[1].start == doctest::Approx(18.0));
  CHECK(windows[1].end == doctest::Approx(20.0));

  // Brute-force check of the blocked indicator at 1e-3 resolution.
  const auto blocked = [&](double t) {
    for (double crossing : {10.0, 13.0, 16.0})
      if (t >= crossing - 2.0 && t <= crossing + 2.0) return true;
    return false;
  };
  const auto idle = [&](double t) {
    for (const auto &w : windows)
      if (t >= w.start && t <= w.end) return true;
    return false;
  };
  for (double t = 0.0005; t < 20.0; t += 1e-3) {
    REQUIRE(idle(t) == !blocked(t));
  }
}

TEST_CASE("idle_windows: complement measure equals the horizon") {
  const CounterRng rng(77);
  for (int i = 0; i < 50; ++i) {
    OccupancyLedger ledger;
    const double tau_l = rng.uniform(1, i, 0.5, 3.0);
    const int count = 1 + static_cast<int>(rng.uniform(2, i, 0.0, 5.0));
    double t = rng.uniform(3, i, 5.0, 15.0);
    std::vector<double> crossings;
    for (int k = 0; k < count; ++k) {
      crossings.push_back(t);
      ledger.commit(k + 1, 1, oracles::constant_speed(t - 5.0, 10.0, 100.0),
                    {{0, t}});
      t += rng.uniform(10 + k, i, 0.5, 6.0);
    }
    const TimeWindow horizon{0.0, t + 10.0};
    const auto windows = idle_windows(ledger, 0, horizon, tau_l);

    double idle_measure = 0.0;
    for (const auto &w : windows) {
      REQUIRE(w.length() > 0.0);
      idle_measure += w.length();
      for (double crossing : crossings) {
        // No idle window may intersect a blocked interval.
        REQUIRE((w.end <= crossing - tau_l + 1e-9 || w.start >= crossing + tau_l - 1e-9));
      }
    }
    double blocked_measure = 0.0;
    std::vector<std::pair<double, double>> merged;
    for (double crossing : crossings) {
      const double lo = std::max(horizon.start, crossing - tau_l);
      const double hi = std::min(horizon.end, crossing + tau_l);
      if (!merged.empty() && lo <= merged.back().second)
        merged.back().second = std::max(merged.back().second, hi);
      else
        merged.emplace_back(lo, hi);
    }
    for (const auto &[lo, hi] : merged) blocked_measure += hi - lo;
    REQUIRE(std::abs(idle_measure + blocked_measure - horizon.length()) < 1e-9);
  }
}

TEST_CASE("gap guarantee") {
  CHECK(gap_guarantee_holds(SafetyParams{4.0, 2.0}));
  CHECK(!gap_guarantee_holds(SafetyParams{3.0, 2.0}));
  CHECK(gap_guarantee_holds(SafetyParams{5.0, 2.0}));
}

TEST_CASE("gap guarantee as a window property") {
  // Crossings spaced exactly tau_r leave a gap of tau_r - 2*tau_l.
  const CounterRng rng(123);
  for (int i = 0; i < 200; ++i) {
    const double tau_l = rng.uniform(1, i, 0.5, 3.0);
    const bool boundary = rng.uniform01(2, i) < 0.3;
    const double tau_r = boundary ? 2.0 * tau_l : 2.0 * tau_l + rng.uniform(3, i, 0.1, 3.0);
    const double first = rng.uniform(4, i, 10.0, 40.0);

    OccupancyLedger ledger;
    ledger.commit(1, 1, oracles::constant_speed(first - 5.0, 10.0, 100.0),
                  {{0, first}});
    ledger.commit(2, 1, oracles::constant_speed(first - 5.0 + tau_r, 10.0, 100.0),
                  {{0, first + tau_r}});

    const auto windows =
        idle_windows(ledger, 0, TimeWindow{first - 1.0, first + tau_r + 1.0}, tau_l);
    bool found_between = false;
    for (const auto &w : windows) {
      if (w.start > first && w.end < first + tau_r) {
        found_between = true;
        REQUIRE(w.length() == doctest::Approx(tau_r - 2.0 * tau_l).epsilon(1e-9));
      }
    }
    if (tau_r > 2.0 * tau_l + 1e-9) {
      REQUIRE(found_between);
    } else {
      REQUIRE(!found_between);
    }
  }
}

TEST_CASE("audit: empty ledger is clean") {
  const IntersectionLayout layout = oracles::minimal_crossing_layout();
  OccupancyLedger ledger;
  CHECK(audit(ledger, layout, SafetyParams{4.0, 2.0}, kLimits).empty());
}

TEST_CASE("audit: constructed lateral conflict is reported") {
  const IntersectionLayout layout = oracles::minimal_crossing_layout();
  const SafetyParams params{4.0, 2.0};

  // Crossing times 50/10 = 5 s after entry; entries 1 s apart on crossing
  // paths put the crossings 1 s = 0.5*tau_l apart.
  OccupancyLedger ledger;
  ledger.commit(1, 1, oracles::constant_speed(0.0, 10.0, 100.0), {{0, 5.0}});
  ledger.commit(2, 2, oracles::constant_speed(1.0, 10.0, 100.0), {{0, 6.0}});

  const auto violations = audit(ledger, layout, params, kLimits);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].kind == ViolationKind::Lateral);
  CHECK(violations[0].margin == doctest::Approx(0.5 * params.tau_l).epsilon(1e-6));
}

TEST_CASE("audit: state-bound subsumption") {
  // A trajectory accepted by check_state_bounds never produces bound
  // violations in the audit.
  const IntersectionLayout layout = oracles::minimal_crossing_layout();
  const CounterRng rng(31);
  for (int i = 0; i < 30; ++i) {
    const double v0 = rng.uniform(1, i, 4.0, 14.0);
    const double tf = rng.uniform(2, i, 8.0, 20.0);
    const PolyTrajectory traj = solve_cubic_bvp(EntryState{0.0, 0.0, v0}, 100.0, tf);
    if (check_state_bounds(traj, kLimits)) continue;
    OccupancyLedger ledger;
    ledger.commit(1, 1, traj, {{0, invert_position(traj, 50.0)}});
    for (const auto &violation : audit(ledger, layout, SafetyParams{4.0, 2.0}, kLimits)) {
      CHECK(violation.kind != ViolationKind::SpeedBound);
      CHECK(violation.kind != ViolationKind::AccelBound);
    }
  }
}
