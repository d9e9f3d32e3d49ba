#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "motsc/core/rng.hpp"
#include "motsc/sim/intersection.hpp"

using namespace motsc::sim;
using motsc::core::Rng;

namespace {

SimConfig quiet_config() {
  SimConfig cfg;
  cfg.arrival_rates_vph.fill(0.0);
  cfg.episode_seconds = 100000.0;
  cfg.seed = 1;
  return cfg;
}

SimConfig symmetric_config(double vph, uint64_t seed) {
  SimConfig cfg;
  cfg.arrival_rates_vph.fill(vph);
  cfg.episode_seconds = 1e9;  // effectively endless for these tests
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("config validation rejects bad values") {
  SimConfig cfg = quiet_config();
  CHECK_NOTHROW(cfg.validate());
  SimConfig bad = cfg;
  bad.arrival_rates_vph[3] = -1.0;
  CHECK_THROWS_AS(bad.validate(), motsc::config_error);
  bad = cfg;
  bad.yellow_seconds = 5;  // must be < step
  CHECK_THROWS_AS(bad.validate(), motsc::config_error);
  bad = cfg;
  bad.episode_seconds = 12.0;  // not a multiple of 5
  CHECK_THROWS_AS(bad.validate(), motsc::config_error);
  bad = cfg;
  bad.lane_capacity = 0;
  CHECK_THROWS_AS(bad.validate(), motsc::config_error);
  bad = cfg;
  bad.idle_gps = 0.0;
  CHECK_THROWS_AS(bad.validate(), motsc::config_error);
}

TEST_CASE("reset gives an empty intersection in phase 0") {
  Intersection sim(quiet_config());
  const Observation obs = sim.reset();
  CHECK(obs[0] == 1.0);
  CHECK(obs[1] == 0.0);
  CHECK(obs[2] == 0.0);
  CHECK(obs[3] == 0.0);
  CHECK(obs[4] == 0.0);  // min-green not yet served
  for (int i = 5; i < kObsDim; ++i) CHECK(obs[i] == 0.0);
}

TEST_CASE("zero arrivals: zero throughput, zero co2, zero densities forever") {
  Intersection sim(quiet_config());
  sim.reset();
  for (int i = 0; i < 50; ++i) {
    const auto r = sim.step(i % 4);
    CHECK(r.metrics.throughput == 0);
    CHECK(r.metrics.co2_g == 0.0);
    for (int j = 5; j < kObsDim; ++j) REQUIRE(r.obs[j] == 0.0);
  }
}

TEST_CASE("invalid actions and stepping after done are rejected") {
  SimConfig cfg = quiet_config();
  cfg.episode_seconds = 10.0;
  Intersection sim(cfg);
  CHECK_THROWS_AS(sim.step(4), motsc::contract_error);
  CHECK_THROWS_AS(sim.step(-1), motsc::contract_error);
  CHECK(!sim.step(0).done);
  CHECK(sim.step(0).done);
  CHECK_THROWS_AS(sim.step(0), motsc::contract_error);
}

TEST_CASE("queue of 3 under green discharges 2 vehicles in one step") {
  // headway 2 s -> credit 0.5/s; floor(2.5) = 2 releases across 5 ticks
  Intersection sim(quiet_config());
  sim.reset();
  sim.step(0);
  sim.step(0);  // 10 s green: switching now allowed
  sim.inject_queued(1, 3);  // N-through, phase 1
  const auto r = sim.step(1);  // switch... but wait, this inserts yellow
  // switching to phase 1 costs 2 s yellow; hand-check happens below in the
  // dedicated cases. Here just sanity-check conservation of the injection.
  CHECK(r.metrics.throughput >= 0);
}

TEST_CASE("hand-simulated discharge: full green step releases 2 of 3") {
  Intersection sim(quiet_config());
  sim.reset();
  sim.inject_queued(0, 3);  // N-left, phase 0 = current phase, no switch
  const auto r = sim.step(0);
  CHECK(r.metrics.throughput == 2);
  CHECK(r.metrics.ns_throughput == 2);
  CHECK(r.metrics.ew_throughput == 0);
  CHECK(r.metrics.total_queue == 1);
  // ticks: idle 3,2,2,1,1 veh-s (after movement) and 2 discharge veh-s
  const double want_co2 = 1.5 * (3 + 2 + 2 + 1 + 1) + 4.0 * 2;
  CHECK(r.metrics.co2_g == doctest::Approx(want_co2));
  CHECK(r.metrics.co2_rate == doctest::Approx(want_co2 / 5.0));
}

TEST_CASE("hand-simulated discharge: switching inserts 2 s yellow, releases 1 of 3") {
  Intersection sim(quiet_config());
  sim.reset();
  sim.step(0);
  sim.step(0);  // phase 0 green for 10 s -> switch allowed
  sim.inject_queued(1, 3);  // N-through, phase 1
  const auto r = sim.step(1);
  CHECK(r.metrics.throughput == 1);
  CHECK(r.obs[1] == 1.0);  // now in phase 1
  CHECK(r.obs[4] == 0.0);  // only 3 s green so far
  CHECK(r.metrics.total_queue == 2);
}

TEST_CASE("action during un-elapsed min-green is ignored") {
  Intersection sim(quiet_config());
  sim.reset();
  const auto r1 = sim.step(2);  // 0 s green so far: ignored
  CHECK(r1.obs[0] == 1.0);      // still phase 0
  const auto r2 = sim.step(2);  // 5 s green: still ignored
  CHECK(r2.obs[0] == 1.0);
  const auto r3 = sim.step(2);  // 10 s green: honored
  CHECK(r3.obs[2] == 1.0);
}

TEST_CASE("min-green flag signals when a switch would be honored") {
  Intersection sim(quiet_config());
  sim.reset();
  auto r = sim.step(0);
  CHECK(r.obs[4] == 0.0);  // 5 s
  r = sim.step(0);
  CHECK(r.obs[4] == 1.0);  // 10 s
  r = sim.step(1);         // switch: yellow 2 + green 3
  CHECK(r.obs[4] == 0.0);
  r = sim.step(1);  // 8 s
  CHECK(r.obs[4] == 0.0);
  r = sim.step(1);  // 13 s
  CHECK(r.obs[4] == 1.0);
}

TEST_CASE("phase changes respect min-green spacing under adversarial actions") {
  Intersection sim(symmetric_config(300.0, 7));
  sim.reset();
  Rng rng(8);
  int last_phase = sim.phase();
  int last_change_step = -1000;
  bool first_change = true;
  for (int step = 0; step < 2000; ++step) {
    const auto r = sim.step(static_cast<int>(rng.uniform_below(4)));
    int phase_now = -1;
    for (int p = 0; p < 4; ++p) {
      if (r.obs[p] == 1.0) phase_now = p;
    }
    REQUIRE(phase_now >= 0);
    if (phase_now != last_phase) {
      if (first_change) {
        REQUIRE(step >= 2);  // 10 s of green from reset
        first_change = false;
      } else {
        // previous activation was mid-step: 3 + 5k green ticks needs k >= 2
        REQUIRE(step - last_change_step >= 3);
      }
      last_change_step = step;
      last_phase = phase_now;
    }
  }
  CHECK(last_change_step > 0);  // the policy did switch
}

TEST_CASE("conservation holds over 10k randomized steps with heavy demand and spill") {
  SimConfig cfg;
  cfg.arrival_rates_vph.fill(700.0);  // way oversaturated
  cfg.lane_capacity = 15;             // force boundary holds
  cfg.episode_seconds = 1e9;
  cfg.seed = 11;
  Intersection sim(cfg);
  sim.reset();
  Rng rng(12);
  for (int i = 0; i < 10000; ++i) {
    sim.step(static_cast<int>(rng.uniform_below(4)));  // throws if conservation breaks
  }
  const auto& c = sim.counters();
  CHECK(c.generated > 0);
  CHECK(c.exited > 0);
  CHECK(c.boundary_held > 0);  // spill actually exercised
  // spilled vehicles emit nothing; exited+held never exceed generated
  CHECK(c.exited + c.boundary_held <= c.generated);
}

TEST_CASE("observation bounds hold under load") {
  SimConfig cfg = symmetric_config(650.0, 13);
  cfg.lane_capacity = 25;
  Intersection sim(cfg);
  sim.reset();
  Rng rng(14);
  for (int i = 0; i < 3000; ++i) {
    const auto r = sim.step(static_cast<int>(rng.uniform_below(4)));
    double onehot = 0.0;
    for (int p = 0; p < 4; ++p) onehot += r.obs[p];
    REQUIRE(onehot == 1.0);
    for (int j = 0; j < kObsDim; ++j) {
      REQUIRE(r.obs[j] >= 0.0);
      REQUIRE(r.obs[j] <= 1.0);
    }
    for (int lane = 0; lane < kNumLanes; ++lane) {
      REQUIRE(r.obs[13 + lane] <= r.obs[5 + lane] + 1e-15);  // queue <= density
    }
  }
}

TEST_CASE("same seed and actions give identical trajectories") {
  SimConfig cfg = symmetric_config(420.0, 21);
  Intersection a(cfg), b(cfg);
  a.reset();
  b.reset();
  Rng rng(22);
  for (int i = 0; i < 500; ++i) {
    const int action = static_cast<int>(rng.uniform_below(4));
    const auto ra = a.step(action);
    const auto rb = b.step(action);
    REQUIRE(ra.obs == rb.obs);
    REQUIRE(ra.metrics.throughput == rb.metrics.throughput);
    REQUIRE(ra.metrics.co2_g == rb.metrics.co2_g);
  }
  CHECK(a.state_equals(b));

  // different seed diverges
  Intersection c(cfg);
  c.reset(999);
  c.step(0);
  a.reset();
  a.step(0);
  CHECK(!a.state_equals(c));
}

TEST_CASE("state save/load resumes the exact trajectory") {
  SimConfig cfg = symmetric_config(380.0, 31);
  Intersection a(cfg);
  a.reset();
  Rng rng(32);
  std::vector<int> actions;
  for (int i = 0; i < 137; ++i) {
    const int act = static_cast<int>(rng.uniform_below(4));
    actions.push_back(act);
    a.step(act);
  }
  std::stringstream ss;
  a.save_state(ss);
  Intersection b(cfg);
  b.load_state(ss);
  CHECK(a.state_equals(b));
  for (int i = 0; i < 100; ++i) {
    const int act = static_cast<int>(rng.uniform_below(4));
    const auto ra = a.step(act);
    const auto rb = b.step(act);
    REQUIRE(ra.obs == rb.obs);
    REQUIRE(ra.metrics.co2_g == rb.metrics.co2_g);
  }
}

TEST_CASE("more idle time means strictly more co2 on drained traces") {
  // identical vehicles, zero arrivals: discharge and cruise veh-seconds match
  // once both traces fully drain, so co2 differs exactly by idle difference
  auto run_drain = [](const std::vector<int>& prefix) {
    Intersection sim(quiet_config());
    sim.reset();
    sim.step(0);
    sim.step(0);  // satisfy min-green so the prefix actions are honored
    for (int lane : {1, 5}) sim.inject_queued(lane, 6);
    for (int a : prefix) sim.step(a);
    // serve both queued phases until everything is out
    for (int i = 0; i < 40; ++i) {
      sim.step((i / 4) % 2 == 0 ? 1 : 3);
    }
    return sim;
  };
  // efficient: serve phase 1 immediately; wasteful: sit on empty phase 0 first
  const Intersection fast = run_drain({1});
  const Intersection slow = run_drain({0, 0, 0});
  const auto& cf = fast.counters();
  const auto& cs = slow.counters();
  REQUIRE(cf.exited == 12);
  REQUIRE(cs.exited == 12);
  CHECK(cf.discharge_veh_s == cs.discharge_veh_s);
  CHECK(cf.cruise_veh_s == cs.cruise_veh_s);
  CHECK(cs.idle_veh_s > cf.idle_veh_s);
  const double co2_fast = 1.5 * cf.idle_veh_s + 4.0 * cf.discharge_veh_s + 2.5 * cf.cruise_veh_s;
  const double co2_slow = 1.5 * cs.idle_veh_s + 4.0 * cs.discharge_veh_s + 2.5 * cs.cruise_veh_s;
  CHECK(co2_slow > co2_fast);
}

TEST_CASE("metrics_window means and shares") {
  std::vector<StepMetrics> h(4);
  h[0].throughput = 2;
  h[0].co2_rate = 10.0;
  h[1].throughput = 4;
  h[1].co2_rate = 20.0;
  h[2] = h[3] = h[1];
  auto w = metrics_window(h, 2);
  CHECK(w.mean_throughput == doctest::Approx(4.0));
  CHECK(w.mean_co2_rate == doctest::Approx(20.0));
  w = metrics_window(std::span<const StepMetrics>(h.data(), 2), 2);
  CHECK(w.mean_throughput == doctest::Approx(3.0));
  CHECK(w.mean_co2_rate == doctest::Approx(15.0));

  h[0].ns_throughput = 2;
  h[1].ns_throughput = 1;
  h[1].ew_throughput = 3;
  w = metrics_window(std::span<const StepMetrics>(h.data(), 2), 2);
  CHECK(w.ns_share == doctest::Approx(0.5));
  CHECK(w.ew_share == doctest::Approx(0.5));

  CHECK_THROWS_AS(metrics_window({}, 1), motsc::contract_error);
  CHECK_THROWS_AS(metrics_window(std::span<const StepMetrics>(h.data(), 2), 3),
                  motsc::contract_error);
}

TEST_CASE("symmetric demand + symmetric random policy serves NS about half") {
  double total_ns = 0.0, total = 0.0;
  for (uint64_t seed : {41ULL, 42ULL, 43ULL}) {
    Intersection sim(symmetric_config(350.0, seed));
    sim.reset();
    Rng rng(seed + 100);
    for (int i = 0; i < 700; ++i) {
      const auto r = sim.step(static_cast<int>(rng.uniform_below(4)));
      total_ns += r.metrics.ns_throughput;
      total += r.metrics.throughput;
    }
  }
  REQUIRE(total > 0);
  const double share = total_ns / total;
  CHECK(share == doctest::Approx(0.5).epsilon(0.1));  // 0.5 +- 0.05
}
