#include <doctest.h>

#include <sstream>
#include <vector>

#include "motsc/agent/replay_buffer.hpp"
#include "motsc/core/error.hpp"
#include "motsc/pref/segment.hpp"

using motsc::contract_error;
using motsc::agent::ReplayBuffer;
using motsc::sim::StepMetrics;

namespace {

StepMetrics metrics_for(int i) {
  StepMetrics m;
  m.throughput = i;
  m.co2_g = 10.0 * i + 0.5;
  m.co2_rate = m.co2_g / 5.0;
  m.ns_throughput = i / 2;
  m.ew_throughput = i - i / 2;
  m.total_queue = 3 * i;
  m.sim_time = 5.0 * (i + 1);
  return m;
}

// Distinct per-index payloads so cross-index mixups can't cancel out.
ReplayBuffer make_buffer(int n, int obs_dim = 4, size_t capacity = 64) {
  ReplayBuffer buf(obs_dim, capacity);
  for (int i = 0; i < n; ++i) {
    std::vector<double> obs(obs_dim), next(obs_dim);
    for (int d = 0; d < obs_dim; ++d) {
      obs[d] = i + 0.01 * d;
      next[d] = i + 0.01 * d + 0.5;
    }
    buf.push(obs, i % 4, next, false, metrics_for(i));
  }
  return buf;
}

}  // namespace

TEST_CASE("replay buffer push and read back") {
  auto buf = make_buffer(6);
  REQUIRE(buf.size() == 6);
  CHECK(buf.obs_dim() == 4);

  for (size_t i = 0; i < 6; ++i) {
    const auto o = buf.obs_at(i);
    const auto n = buf.next_obs_at(i);
    REQUIRE(o.size() == 4);
    CHECK(o[0] == doctest::Approx(double(i)));
    CHECK(o[3] == doctest::Approx(i + 0.03));
    CHECK(n[0] == doctest::Approx(i + 0.5));
    CHECK(buf.action_at(i) == int(i) % 4);
    CHECK_FALSE(buf.done_at(i));
    CHECK(buf.metrics_at(i).throughput == int(i));
    CHECK(buf.metrics_at(i).sim_time == 5.0 * (i + 1));
    // Rewards start unset.
    CHECK(buf.raw_reward_at(i) == 0.0);
    CHECK(buf.reward_at(i) == 0.0);
    CHECK(buf.reward_version_at(i) == 0);
  }
}

TEST_CASE("replay buffer rejects overflow and bad dims") {
  ReplayBuffer buf(3, 2);
  std::vector<double> o{1, 2, 3};
  StepMetrics m;
  buf.push(o, 0, o, false, m);
  buf.push(o, 1, o, true, m);
  CHECK_THROWS_AS(buf.push(o, 2, o, false, m), contract_error);

  ReplayBuffer buf2(3, 8);
  std::vector<double> wrong{1, 2};
  CHECK_THROWS_AS(buf2.push(wrong, 0, o, false, m), contract_error);
  CHECK_THROWS_AS(buf2.push(o, 0, wrong, false, m), contract_error);
}

TEST_CASE("replay buffer reward relabeling fields") {
  auto buf = make_buffer(4);
  buf.set_reward(2, -1.25, 0.75, 3);
  CHECK(buf.raw_reward_at(2) == -1.25);
  CHECK(buf.reward_at(2) == 0.75);
  CHECK(buf.reward_version_at(2) == 3);
  CHECK(buf.reward_version_at(1) == 0);  // neighbors untouched
}

TEST_CASE("replay buffer save/load round-trip") {
  auto buf = make_buffer(10);
  buf.set_reward(0, 0.1, -0.2, 1);
  buf.set_reward(9, 2.5, 1.5, 2);

  std::stringstream ss;
  buf.save(ss);

  ReplayBuffer loaded(1, 1);  // constructor values are overwritten by load
  loaded.load(ss);
  CHECK(loaded == buf);
  CHECK(loaded.size() == 10);
  CHECK(loaded.obs_dim() == 4);
  CHECK(loaded.raw_reward_at(9) == 2.5);
  CHECK(loaded.reward_version_at(0) == 1);

  SUBCASE("garbage header is rejected") {
    std::stringstream bad("not a replay buffer");
    ReplayBuffer victim(1, 1);
    CHECK_THROWS_AS(victim.load(bad), motsc::config_error);
  }

  SUBCASE("modified copy compares unequal") {
    ReplayBuffer other(1, 1);
    std::stringstream ss2;
    buf.save(ss2);
    other.load(ss2);
    other.set_reward(5, 99.0, 99.0, 9);
    CHECK_FALSE(other == buf);
  }
}

TEST_CASE("segment extraction copies the addressed rows") {
  auto buf = make_buffer(8);

  const auto seg = motsc::pref::extract_segment(buf, 3, 2);
  CHECK(seg.start == 3);
  REQUIRE(seg.length() == 2);
  CHECK(seg.obs[0][0] == doctest::Approx(3.0));
  CHECK(seg.obs[1][0] == doctest::Approx(4.0));
  CHECK(seg.next_obs[0][0] == doctest::Approx(3.5));
  CHECK(seg.actions[0] == 3);
  CHECK(seg.actions[1] == 0);
  CHECK(seg.metrics[1].throughput == 4);

  CHECK(seg == motsc::pref::extract_segment(buf, 3, 2));
  CHECK_FALSE(seg == motsc::pref::extract_segment(buf, 4, 2));

  CHECK_THROWS_AS(motsc::pref::extract_segment(buf, 7, 2), contract_error);
  CHECK_THROWS_AS(motsc::pref::extract_segment(buf, 0, 0), contract_error);
}

TEST_CASE("eligible starts exclude mid-segment episode ends") {
  ReplayBuffer buf(2, 16);
  std::vector<double> o{0, 0};
  StepMetrics m;
  for (int i = 0; i < 10; ++i) buf.push(o, 0, o, i == 4, m);

  // H=1: a done transition is always at the segment end, so all starts work.
  CHECK(motsc::pref::eligible_segment_starts(buf, 1).size() == 10);

  // H=2: only start 4 places the done mid-segment (position 0 of [4,5]).
  const auto s2 = motsc::pref::eligible_segment_starts(buf, 2);
  CHECK(s2 == std::vector<size_t>{0, 1, 2, 3, 5, 6, 7, 8});

  // H=3: starts 3 and 4 cover index 4 non-finally.
  const auto s3 = motsc::pref::eligible_segment_starts(buf, 3);
  CHECK(s3 == std::vector<size_t>{0, 1, 2, 5, 6, 7});

  // Longer than the buffer: nothing qualifies.
  CHECK(motsc::pref::eligible_segment_starts(buf, 11).empty());
}
