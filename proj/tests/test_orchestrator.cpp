#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "motsc/annotate/oracle.hpp"
#include "motsc/orchestrator/run.hpp"
#include "motsc/orchestrator/standardize.hpp"

using motsc::config_error;
using motsc::contract_error;
using motsc::annotate::AnnotationResult;
using motsc::annotate::OracleAnnotator;
using motsc::annotate::SegmentPairQuery;
using motsc::orchestrator::apply_fast_profile;
using motsc::orchestrator::BaselineKind;
using motsc::orchestrator::baseline_kind_from_string;
using motsc::orchestrator::BaselineSpec;
using motsc::orchestrator::grid_search_linear;
using motsc::orchestrator::GridRow;
using motsc::orchestrator::OnlineStandardizer;
using motsc::orchestrator::run_baseline;
using motsc::orchestrator::run_priority_suite;
using motsc::orchestrator::run_rlaif;
using motsc::orchestrator::RunOptions;
using motsc::orchestrator::ScenarioSpec;
using motsc::orchestrator::select_grid_alpha;
using motsc::sim::WindowMetrics;

namespace fs = std::filesystem;

namespace {

// Small enough that a full preference-feedback run takes a second or two:
// 30-step episodes, 3 sessions of 16 queries each at steps 200/400/600.
ScenarioSpec micro_scenario(uint64_t seed) {
  ScenarioSpec spec;
  spec.name = "micro";
  spec.sim_config.arrival_rates_vph = {250, 500, 250, 500, 300, 650, 300, 650};
  spec.sim_config.episode_seconds = 150.0;
  spec.objectives = {"maximizing the throughput", "minimizing carbon emission"};
  spec.user_specification = "keep traffic moving without excessive emissions";
  spec.oracle.w_throughput = 0.7;
  spec.oracle.w_co2_rate = -0.3;
  spec.oracle.zscore_metrics = true;
  spec.schedule.run_steps = 600;
  spec.schedule.feedback_period = 200;
  spec.schedule.bootstrap_steps = 200;
  spec.schedule.annotation_batch = 16;
  spec.schedule.oversample = 3;
  spec.schedule.segment_len = 1;
  spec.master_seed = seed;
  return spec;
}

RunOptions micro_options() {
  RunOptions o;
  o.verbose = false;
  o.learn_start = 100;
  o.eval_every = 300;
  o.eval_episodes = 1;
  o.dqn.batch_size = 32;
  o.dqn.eps_decay_steps = 400;
  o.reward.epochs = 10;
  o.reward.batch_size = 32;
  return o;
}

std::string temp_dir(const std::string& tag) {
  const fs::path d = fs::temp_directory_path() / ("motsc_orch_" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d.string();
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& path) {
  std::ifstream is(path);
  REQUIRE(is.good());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

bool metrics_equal(const WindowMetrics& a, const WindowMetrics& b) {
  return a.mean_throughput == b.mean_throughput && a.mean_co2_rate == b.mean_co2_rate &&
         a.mean_queue == b.mean_queue && a.ns_share == b.ns_share &&
         a.ew_share == b.ew_share;
}

WindowMetrics wm(double thr, double co2) {
  WindowMetrics m;
  m.mean_throughput = thr;
  m.mean_co2_rate = co2;
  return m;
}

// Non-deterministic as far as the runner is concerned, but scripted so the
// test is stable: prefers the segment with more exits, never ties.
struct CountingAnnotator final : motsc::annotate::Annotator {
  int batches = 0;
  std::vector<size_t> batch_sizes;

  std::vector<AnnotationResult> annotate_batch(
      const std::vector<SegmentPairQuery>& queries) override {
    ++batches;
    batch_sizes.push_back(queries.size());
    std::vector<AnnotationResult> out;
    out.reserve(queries.size());
    for (const auto& q : queries) {
      const auto t1 = OracleAnnotator::totals(q.first);
      const auto t2 = OracleAnnotator::totals(q.second);
      out.push_back({t1.throughput >= t2.throughput ? 1 : 2, false, "scripted"});
    }
    return out;
  }
  std::string name() const override { return "counting"; }
  bool deterministic() const override { return false; }
};

struct ThrowingAnnotator final : motsc::annotate::Annotator {
  std::vector<AnnotationResult> annotate_batch(
      const std::vector<SegmentPairQuery>&) override {
    throw motsc::annotate::annotation_error("backend unreachable");
  }
  std::string name() const override { return "throwing"; }
  bool deterministic() const override { return false; }
};

}  // namespace

TEST_CASE("online standardizer matches hand-computed welford updates") {
  OnlineStandardizer st;
  CHECK(st.push(2.0) == 0.0);  // single sample: zero variance floors to 0
  CHECK(st.push(4.0) == doctest::Approx(1.0).epsilon(1e-12));
  // mean 10/3, population std sqrt(8/9)
  CHECK(st.push(4.0) == doctest::Approx((4.0 - 10.0 / 3.0) / std::sqrt(8.0 / 9.0))
                            .epsilon(1e-12));
  CHECK(st.count() == 3);
  CHECK(st.mean() == doctest::Approx(10.0 / 3.0).epsilon(1e-12));

  SUBCASE("extreme values clamp to +/-10") {
    // The sample folds in before standardizing, so |z| <= sqrt(n-1); the
    // clamp needs established statistics before it can engage.
    OnlineStandardizer pos, neg;
    for (int i = 0; i < 200; ++i) {
      pos.push(i % 2 == 0 ? 2.0 : 4.0);
      neg.push(i % 2 == 0 ? 2.0 : 4.0);
    }
    CHECK(pos.push(1e9) == 10.0);
    CHECK(neg.push(-1e9) == -10.0);
  }
  SUBCASE("constant stream keeps returning zero") {
    OnlineStandardizer c;
    CHECK(c.push(5.0) == 0.0);
    CHECK(c.push(5.0) == 0.0);
    CHECK(c.push(5.0) == 0.0);
    CHECK(c.stdev() == 0.0);
  }
  SUBCASE("save/load round-trips the running moments") {
    std::stringstream ss;
    st.save(ss);
    OnlineStandardizer copy;
    copy.load(ss);
    CHECK(copy == st);
    CHECK(copy.push(7.0) == st.push(7.0));
  }
}

TEST_CASE("run options and baseline specs validate") {
  RunOptions ok = micro_options();
  CHECK_NOTHROW(ok.validate());

  RunOptions bad = ok;
  bad.updates_per_step = -1;
  CHECK_THROWS_AS(bad.validate(), config_error);
  bad = ok;
  bad.learn_start = 0;
  CHECK_THROWS_AS(bad.validate(), config_error);
  bad = ok;
  bad.eval_every = 0;
  CHECK_THROWS_AS(bad.validate(), config_error);
  bad = ok;
  bad.eval_episodes = 0;
  CHECK_THROWS_AS(bad.validate(), config_error);
  bad = ok;
  bad.halt_after_session = 0;
  CHECK_THROWS_AS(bad.validate(), config_error);

  BaselineSpec bl;
  bl.kind = BaselineKind::Linear;
  bl.alpha = 0.7;
  CHECK_NOTHROW(bl.validate());
  CHECK(bl.label() == "linear_0.7");
  bl.alpha = 0.75;  // off the grid
  CHECK_THROWS_AS(bl.validate(), config_error);
  bl.alpha = 0.0;
  CHECK_THROWS_AS(bl.validate(), config_error);

  BaselineSpec fixed;
  fixed.kind = BaselineKind::FixedCycle;
  fixed.fixed_green_seconds = 0;
  CHECK_THROWS_AS(fixed.validate(), config_error);
  fixed.fixed_green_seconds = 30;
  CHECK(fixed.label() == "fixed_cycle");

  CHECK(baseline_kind_from_string("linear") == BaselineKind::Linear);
  CHECK(baseline_kind_from_string("throughput") == BaselineKind::Throughput);
  CHECK(baseline_kind_from_string("emission") == BaselineKind::Emission);
  CHECK(baseline_kind_from_string("fixed_cycle") == BaselineKind::FixedCycle);
  CHECK(baseline_kind_from_string("fixed") == BaselineKind::FixedCycle);
  CHECK(baseline_kind_from_string("random") == BaselineKind::Random);
  CHECK_THROWS_AS(baseline_kind_from_string("greedy"), config_error);
}

TEST_CASE("fast profile rewrites the schedule to CI scale") {
  ScenarioSpec spec = micro_scenario(1);
  spec.sim_config.episode_seconds = 10000.0;
  spec.schedule.run_steps = 100000;
  spec.schedule.feedback_period = 5000;
  spec.schedule.bootstrap_steps = 5000;
  RunOptions o;
  apply_fast_profile(spec, o);
  CHECK(spec.sim_config.episode_seconds == 2000.0);
  CHECK(spec.schedule.run_steps == 20000);
  CHECK(o.dqn.eps_decay_steps == 6000);
  CHECK(o.fast);
  const auto sessions = spec.schedule.session_steps();
  REQUIRE(sessions.size() == 4);
  CHECK(sessions[0] == 5000);
  CHECK(sessions[3] == 20000);
}

TEST_CASE("grid alpha selection maximizes throughput inside the co2 budget") {
  // min co2 = 10 -> budget 11; alpha .3 has the best throughput but busts it
  std::vector<GridRow> rows = {{0.1, wm(5.0, 10.0)}, {0.2, wm(8.0, 10.9)},
                               {0.3, wm(9.0, 11.2)}};
  CHECK(select_grid_alpha(rows) == 0.2);

  SUBCASE("throughput ties go to the larger alpha") {
    rows = {{0.4, wm(8.0, 10.5)}, {0.2, wm(7.0, 10.0)}, {0.6, wm(8.0, 10.9)}};
    CHECK(select_grid_alpha(rows) == 0.6);
  }
  SUBCASE("input order does not matter") {
    rows = {{0.3, wm(9.0, 11.2)}, {0.2, wm(8.0, 10.9)}, {0.1, wm(5.0, 10.0)}};
    CHECK(select_grid_alpha(rows) == 0.2);
  }
  SUBCASE("single row wins by default") {
    rows = {{0.5, wm(1.0, 2.0)}};
    CHECK(select_grid_alpha(rows) == 0.5);
  }
  CHECK_THROWS_AS(select_grid_alpha({}), contract_error);
}

TEST_CASE("rlaif micro run: annotation budget is exact and artifacts are written") {
  const std::string dir = temp_dir("budget");
  const ScenarioSpec spec = micro_scenario(11);
  RunOptions opts = micro_options();
  opts.out_dir = dir;

  OracleAnnotator oracle(spec);
  const auto r = run_rlaif(spec, oracle, opts);

  CHECK(r.env_steps == 600);
  CHECK_FALSE(r.halted);
  CHECK(r.annotation_requests == 3 * 16);
  REQUIRE(r.sessions.size() == 3);
  size_t stored_total = 0;
  for (size_t i = 0; i < r.sessions.size(); ++i) {
    const auto& s = r.sessions[i];
    CHECK(s.session == static_cast<int>(i) + 1);
    CHECK(s.step == 200 * static_cast<long long>(i + 1));
    CHECK(s.stats.total == 16);
    CHECK(s.stats.stored + s.stats.ties + s.stats.errors == s.stats.total);
    CHECK(s.replayed == 0);
    CHECK(s.relabel_stdev >= 0.0);
    stored_total += s.stats.stored;
  }
  REQUIRE(r.evals.size() == 2);
  CHECK(r.evals[0].step == 300);
  CHECK(r.evals[1].step == 600);
  CHECK(metrics_equal(r.final_eval, r.evals[1].metrics));
  CHECK(r.evals[1].epsilon < r.evals[0].epsilon);

  // manifest
  const auto manifest = nlohmann::json::parse(slurp(dir + "/manifest.json"));
  CHECK(manifest.at("status") == "finished");
  CHECK(manifest.at("command") == "train");
  CHECK(manifest.at("annotator") == "oracle");
  CHECK(manifest.at("requests_total") == 48);
  CHECK(manifest.at("requests_replayed") == 0);
  CHECK(manifest.at("env_steps") == 600);
  CHECK(manifest.at("sessions").size() == 3);
  CHECK(manifest.at("sessions")[2].at("stored") ==
        r.sessions[2].stats.stored);
  CHECK(manifest.contains("final_eval"));
  CHECK(manifest.at("master_seed") == 11);

  // metric rows: header + one row per eval
  const auto rows = lines_of(dir + "/metrics.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] ==
        "step,throughput,co2_rate,ns_share,ew_share,queue,epsilon,dqn_loss,reward_loss");
  CHECK(rows[1].substr(0, 4) == "300,");
  CHECK(rows[2].substr(0, 4) == "600,");

  CHECK(lines_of(dir + "/annotations.jsonl").size() == 48);
  CHECK(lines_of(dir + "/preferences.jsonl").size() == stored_total);

  std::ifstream state(dir + "/train_state.bin", std::ios::binary);
  REQUIRE(state.good());
  char magic[9] = {};
  state.read(magic, 8);
  CHECK(std::string(magic) == "MOTSCTS1");
}

TEST_CASE("identical seeds reproduce sessions and evals exactly") {
  const ScenarioSpec spec = micro_scenario(7);
  const RunOptions opts = micro_options();  // in-memory

  OracleAnnotator o1(spec), o2(spec);
  const auto a = run_rlaif(spec, o1, opts);
  const auto b = run_rlaif(spec, o2, opts);

  REQUIRE(a.evals.size() == b.evals.size());
  for (size_t i = 0; i < a.evals.size(); ++i) {
    CHECK(metrics_equal(a.evals[i].metrics, b.evals[i].metrics));
    CHECK(a.evals[i].dqn_loss == b.evals[i].dqn_loss);
    CHECK(a.evals[i].reward_loss == b.evals[i].reward_loss);
    CHECK(a.evals[i].epsilon == b.evals[i].epsilon);
  }
  REQUIRE(a.sessions.size() == b.sessions.size());
  for (size_t i = 0; i < a.sessions.size(); ++i) {
    CHECK(a.sessions[i].stats.stored == b.sessions[i].stats.stored);
    CHECK(a.sessions[i].stats.ties == b.sessions[i].stats.ties);
    CHECK(a.sessions[i].reward_loss_last == b.sessions[i].reward_loss_last);
    CHECK(a.sessions[i].relabel_mean == b.sessions[i].relabel_mean);
  }

  // different seed, different trajectory
  const ScenarioSpec other = micro_scenario(8);
  OracleAnnotator o3(other);
  const auto c = run_rlaif(other, o3, opts);
  CHECK_FALSE(metrics_equal(a.evals[0].metrics, c.evals[0].metrics));
}

TEST_CASE("halt and resume reproduce the uninterrupted run bit for bit") {
  const ScenarioSpec spec = micro_scenario(23);
  const std::string dir_full = temp_dir("full");
  const std::string dir_part = temp_dir("part");

  RunOptions opts = micro_options();
  opts.out_dir = dir_full;
  OracleAnnotator o1(spec);
  const auto full = run_rlaif(spec, o1, opts);

  RunOptions halted = micro_options();
  halted.out_dir = dir_part;
  halted.halt_after_session = 2;
  OracleAnnotator o2(spec);
  const auto part = run_rlaif(spec, o2, halted);
  CHECK(part.halted);
  CHECK(part.env_steps == 400);
  CHECK(part.sessions.size() == 2);
  CHECK(nlohmann::json::parse(slurp(dir_part + "/manifest.json")).at("status") ==
        "halted");

  RunOptions resume = micro_options();
  resume.out_dir = dir_part;
  resume.resume = true;
  OracleAnnotator o3(spec);
  const auto rest = run_rlaif(spec, o3, resume);
  CHECK_FALSE(rest.halted);
  CHECK(rest.env_steps == 600);
  REQUIRE(rest.sessions.size() == 3);
  CHECK(rest.annotation_requests == 48);

  // the preference dataset, metric rows, and final evaluation all match the
  // uninterrupted run exactly
  CHECK(slurp(dir_part + "/preferences.jsonl") == slurp(dir_full + "/preferences.jsonl"));
  CHECK(slurp(dir_part + "/metrics.csv") == slurp(dir_full + "/metrics.csv"));
  CHECK(slurp(dir_part + "/annotations.jsonl") == slurp(dir_full + "/annotations.jsonl"));
  CHECK(metrics_equal(rest.final_eval, full.final_eval));
  REQUIRE(rest.evals.size() == full.evals.size());
  for (size_t i = 0; i < full.evals.size(); ++i)
    CHECK(rest.evals[i].dqn_loss == full.evals[i].dqn_loss);
  for (size_t i = 0; i < full.sessions.size(); ++i) {
    CHECK(rest.sessions[i].stats.stored == full.sessions[i].stats.stored);
    CHECK(rest.sessions[i].reward_loss_last == full.sessions[i].reward_loss_last);
  }
  const auto manifest = nlohmann::json::parse(slurp(dir_part + "/manifest.json"));
  CHECK(manifest.at("status") == "finished");
  CHECK(manifest.at("requests_total") == 48);

  SUBCASE("resuming a finished run is a no-op") {
    OracleAnnotator o4(spec);
    const auto again = run_rlaif(spec, o4, resume);
    CHECK(again.env_steps == 600);
    CHECK(again.annotation_requests == 48);
    CHECK(again.sessions.size() == 3);
    CHECK(metrics_equal(again.final_eval, full.final_eval));
    CHECK(slurp(dir_part + "/preferences.jsonl") ==
          slurp(dir_full + "/preferences.jsonl"));
  }
}

TEST_CASE("journal prefix is replayed instead of re-annotated") {
  const ScenarioSpec spec = micro_scenario(23);

  // Donor journal from a completed oracle run.
  const std::string donor = temp_dir("donor");
  {
    RunOptions opts = micro_options();
    opts.out_dir = donor;
    OracleAnnotator oracle(spec);
    run_rlaif(spec, oracle, opts);
  }
  const auto donor_lines = lines_of(donor + "/annotations.jsonl");
  REQUIRE(donor_lines.size() == 48);

  SUBCASE("non-deterministic annotators only see the unanswered suffix") {
    // Pretend a previous run was killed after journaling 5 answers of
    // session 1: those answers are reused verbatim.
    const std::string dir = temp_dir("replay");
    {
      std::ofstream os(dir + "/annotations.jsonl");
      for (size_t i = 0; i < 5; ++i) os << donor_lines[i] << '\n';
    }
    RunOptions opts = micro_options();
    opts.out_dir = dir;
    CountingAnnotator counting;
    const auto r = run_rlaif(spec, counting, opts);
    REQUIRE(counting.batch_sizes.size() == 3);
    CHECK(counting.batch_sizes[0] == 11);  // 16 - 5 replayed
    CHECK(counting.batch_sizes[1] == 16);
    CHECK(counting.batch_sizes[2] == 16);
    CHECK(r.sessions[0].replayed == 5);
    CHECK(r.annotation_requests == 48);
    CHECK(lines_of(dir + "/annotations.jsonl").size() == 48);
    const auto manifest = nlohmann::json::parse(slurp(dir + "/manifest.json"));
    CHECK(manifest.at("requests_replayed") == 5);
  }

  SUBCASE("a journal from a different run is rejected") {
    const std::string dir = temp_dir("mismatch");
    auto rec = nlohmann::json::parse(donor_lines[0]);
    rec["s1"] = rec["s1"].get<int64_t>() + 1;
    {
      std::ofstream os(dir + "/annotations.jsonl");
      os << rec.dump() << '\n';
    }
    RunOptions opts = micro_options();
    opts.out_dir = dir;
    OracleAnnotator oracle(spec);
    CHECK_THROWS_AS(run_rlaif(spec, oracle, opts), config_error);
  }

  SUBCASE("a deterministic annotator cross-checks journaled labels") {
    const std::string dir = temp_dir("flipped");
    auto rec = nlohmann::json::parse(donor_lines[0]);
    rec["label"] = rec["label"].get<int>() == 1 ? 2 : 1;
    {
      std::ofstream os(dir + "/annotations.jsonl");
      os << rec.dump() << '\n';
    }
    RunOptions opts = micro_options();
    opts.out_dir = dir;
    OracleAnnotator oracle(spec);
    CHECK_THROWS_AS(run_rlaif(spec, oracle, opts), config_error);
  }
}

TEST_CASE("annotator hard failure leaves a resumable checkpoint") {
  const ScenarioSpec spec = micro_scenario(31);
  const std::string dir = temp_dir("crash");
  RunOptions opts = micro_options();
  opts.out_dir = dir;

  ThrowingAnnotator thrower;
  CHECK_THROWS_WITH_AS(run_rlaif(spec, thrower, opts),
                       doctest::Contains("annotator failed in session 1"),
                       std::runtime_error);
  CHECK(fs::exists(dir + "/train_state.bin"));
  const auto manifest = nlohmann::json::parse(slurp(dir + "/manifest.json"));
  CHECK(manifest.at("status") == "halted");
  CHECK(manifest.at("env_steps") == 200);

  RunOptions resume = micro_options();
  resume.out_dir = dir;
  resume.resume = true;
  OracleAnnotator oracle(spec);
  const auto r = run_rlaif(spec, oracle, resume);
  CHECK(r.env_steps == 600);
  CHECK(r.sessions.size() == 3);
  CHECK(r.annotation_requests == 48);
  CHECK(nlohmann::json::parse(slurp(dir + "/manifest.json")).at("status") == "finished");
}

TEST_CASE("baselines run end to end") {
  const ScenarioSpec spec = micro_scenario(5);
  RunOptions opts = micro_options();

  const std::vector<BaselineKind> kinds = {BaselineKind::Linear, BaselineKind::Throughput,
                                           BaselineKind::Emission, BaselineKind::FixedCycle,
                                           BaselineKind::Random};
  for (const auto kind : kinds) {
    CAPTURE(static_cast<int>(kind));
    BaselineSpec bl;
    bl.kind = kind;
    const auto r = run_baseline(spec, bl, opts);
    CHECK(r.env_steps == 600);
    CHECK(r.sessions.empty());
    CHECK(r.annotation_requests == 0);
    REQUIRE(r.evals.size() == 2);
    CHECK(r.final_eval.mean_throughput > 0.0);
    CHECK(r.final_eval.mean_co2_rate > 0.0);
  }

  SUBCASE("baseline manifests carry the baseline label") {
    const std::string dir = temp_dir("baseline");
    RunOptions out = opts;
    out.out_dir = dir;
    BaselineSpec bl;
    bl.kind = BaselineKind::Emission;
    run_baseline(spec, bl, out);
    const auto manifest = nlohmann::json::parse(slurp(dir + "/manifest.json"));
    CHECK(manifest.at("command") == "baseline");
    CHECK(manifest.at("baseline") == "emission");
    CHECK(manifest.at("annotator") == "none");
  }
}

TEST_CASE("grid search covers alpha 0.1 through 0.9") {
  const ScenarioSpec spec = micro_scenario(3);
  RunOptions opts = micro_options();
  opts.updates_per_step = 0;  // policy quality is irrelevant here
  const std::string dir = temp_dir("grid");
  opts.out_dir = dir;

  const auto grid = grid_search_linear(spec, opts);
  REQUIRE(grid.rows.size() == 9);
  for (size_t i = 0; i < grid.rows.size(); ++i) {
    CHECK(grid.rows[i].alpha == doctest::Approx((i + 1) / 10.0));
    CHECK(grid.rows[i].metrics.mean_throughput > 0.0);
  }
  const double best = grid.best_alpha;
  CHECK(best >= 0.1);
  CHECK(best <= 0.9);
  CHECK(select_grid_alpha(grid.rows) == best);

  CHECK(lines_of(dir + "/grid.csv").size() == 10);
  CHECK(fs::exists(dir + "/linear_0.1/manifest.json"));
  CHECK(fs::exists(dir + "/linear_0.9/metrics.csv"));
}

TEST_CASE("priority suite runs one rlaif per variant") {
  // A variants scenario at micro scale, written on the fly.
  const std::string dir = temp_dir("priority");
  const std::string scenario_path = dir + "/scenario.json";
  {
    nlohmann::json j;
    j["name"] = "micro_priorities";
    j["sim"] = {{"arrival_rates_vph", {300, 400, 300, 400, 300, 400, 300, 400}},
                {"episode_seconds", 150}};
    j["objectives"] = {"maximizing the North-South throughput",
                       "maximizing the East-West throughput"};
    j["schedule"] = {{"run_steps", 600}, {"feedback_period", 200},
                     {"annotation_batch", 16}, {"oversample", 3},
                     {"bootstrap_steps", 200}, {"segment_len", 1}};
    j["default_variant"] = "equal";
    j["variants"] = {
        {"equal",
         {{"user_specification", "treat both arteries the same"},
          {"oracle", {{"w_ns", 0.5}, {"w_ew", 0.5}}}}},
        {"ns_priority",
         {{"user_specification", "favor the north-south artery"},
          {"oracle", {{"w_ns", 0.65}, {"w_ew", 0.35}}}}},
    };
    std::ofstream os(scenario_path);
    os << j.dump(2);
  }

  RunOptions opts = micro_options();
  opts.updates_per_step = 0;
  opts.out_dir = dir + "/runs";
  const auto rows = run_priority_suite(
      scenario_path, 17,
      [](const ScenarioSpec& s) { return std::make_unique<OracleAnnotator>(s); }, opts);

  REQUIRE(rows.size() == 2);
  CHECK(rows[0].variant == "equal");
  CHECK(rows[1].variant == "ns_priority");
  CHECK(rows[0].user_specification == "treat both arteries the same");
  for (const auto& row : rows) {
    // policy quality is out of scope here (updates are off); shares just
    // have to be well-formed
    CHECK(row.metrics.ns_share >= 0.0);
    CHECK(row.metrics.ns_share <= 1.0);
    CHECK(row.metrics.ew_share == doctest::Approx(1.0 - row.metrics.ns_share));
  }
  CHECK(lines_of(dir + "/runs/priority.csv").size() == 3);
  const auto manifest =
      nlohmann::json::parse(slurp(dir + "/runs/ns_priority/manifest.json"));
  CHECK(manifest.at("variant") == "ns_priority");
  CHECK(manifest.at("master_seed") == 17);
}

TEST_CASE("run directory guards") {
  const ScenarioSpec spec = micro_scenario(2);
  RunOptions opts = micro_options();
  opts.updates_per_step = 0;

  SUBCASE("a finished run refuses to be overwritten") {
    const std::string dir = temp_dir("guard_overwrite");
    opts.out_dir = dir;
    OracleAnnotator oracle(spec);
    run_rlaif(spec, oracle, opts);
    OracleAnnotator again(spec);
    CHECK_THROWS_AS(run_rlaif(spec, again, opts), config_error);
  }
  SUBCASE("resume needs an existing checkpoint") {
    opts.out_dir = temp_dir("guard_nostate");
    opts.resume = true;
    OracleAnnotator oracle(spec);
    CHECK_THROWS_AS(run_rlaif(spec, oracle, opts), config_error);
  }
  SUBCASE("resume needs an output directory") {
    opts.out_dir = "";
    opts.resume = true;
    OracleAnnotator oracle(spec);
    CHECK_THROWS_AS(run_rlaif(spec, oracle, opts), config_error);
  }
  SUBCASE("baselines cannot resume") {
    const std::string dir = temp_dir("guard_baseline");
    opts.out_dir = dir;
    BaselineSpec bl;
    bl.kind = BaselineKind::Random;
    run_baseline(spec, bl, opts);
    opts.resume = true;
    CHECK_THROWS_AS(run_baseline(spec, bl, opts), config_error);
  }
}
