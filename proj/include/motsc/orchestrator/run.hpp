#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "motsc/agent/dqn.hpp"
#include "motsc/annotate/annotator.hpp"
#include "motsc/orchestrator/scenario.hpp"
#include "motsc/pref/reward_model.hpp"
#include "motsc/sim/types.hpp"

namespace motsc::orchestrator {

struct RunOptions {
  std::string out_dir;  // empty: in-memory run, no artifacts written
  bool resume = false;  // continue from out_dir's last session checkpoint
  bool fast = false;    // informational; apply_fast_profile does the rewriting
  bool verbose = true;
  int updates_per_step = 1;      // DQN gradient steps per environment step
  long long learn_start = 1000;  // buffer size before DQN updates begin
  long long eval_every = 5000;   // greedy evaluation cadence in env steps
  int eval_episodes = 3;
  int halt_after_session = -1;  // test hook: stop right after this session
  agent::DqnConfig dqn;
  pref::RewardModelConfig reward;

  void validate() const;
};

// Shrinks a run to CI scale: 2000 s episodes, 20k steps (4 feedback
// sessions) and a matching epsilon anneal.
void apply_fast_profile(ScenarioSpec& spec, RunOptions& options);

enum class BaselineKind { Linear, Throughput, Emission, FixedCycle, Random };

struct BaselineSpec {
  BaselineKind kind = BaselineKind::Linear;
  double alpha = 0.7;            // Linear: r = alpha*z(r1) - (1-alpha)*z(r2)
  int fixed_green_seconds = 30;  // FixedCycle phase hold
  void validate() const;
  std::string label() const;
};

BaselineKind baseline_kind_from_string(const std::string& name);

struct SessionSummary {
  int session = 0;      // 1-based
  long long step = 0;   // env step the session fired at
  annotate::FilterStats stats;
  size_t replayed = 0;  // answers taken from (or verified against) the journal
  double reward_loss_first = 0.0;
  double reward_loss_last = 0.0;
  double relabel_mean = 0.0;
  double relabel_stdev = 0.0;
};

struct EvalPoint {
  long long step = 0;
  sim::WindowMetrics metrics;
  double epsilon = 0.0;
  double dqn_loss = 0.0;    // mean TD loss since the previous eval
  double reward_loss = 0.0; // final-epoch ensemble loss of the last session
};

struct RunResult {
  std::string out_dir;
  long long env_steps = 0;
  bool halted = false;  // stopped at a session checkpoint, resumable
  std::vector<SessionSummary> sessions;
  std::vector<EvalPoint> evals;
  sim::WindowMetrics final_eval;
  long long annotation_requests = 0;  // journal entries across the whole run
};

// The full preference-feedback loop: bootstrap on the proxy reward, then at
// every feedback boundary sample disagreement pairs, annotate, train the
// reward ensemble and relabel the replay buffer; greedy evaluations on
// held-out seeds are logged throughout. With options.resume, continues from
// the last session checkpoint in out_dir, replaying the annotation journal.
RunResult run_rlaif(const ScenarioSpec& scenario, annotate::Annotator& annotator,
                    const RunOptions& options);

// Same environment loop with a fixed programmatic reward (or no learning at
// all for FixedCycle/Random).
RunResult run_baseline(const ScenarioSpec& scenario, const BaselineSpec& baseline,
                       const RunOptions& options);

struct GridRow {
  double alpha = 0.0;
  sim::WindowMetrics metrics;
};

struct GridResult {
  std::vector<GridRow> rows;  // alpha = 0.1 .. 0.9
  double best_alpha = 0.0;
};

// Maximize throughput subject to co2_rate within 10% of the grid minimum;
// ties go to the larger alpha.
double select_grid_alpha(const std::vector<GridRow>& rows);

GridResult grid_search_linear(const ScenarioSpec& scenario, const RunOptions& options);

using AnnotatorFactory =
    std::function<std::unique_ptr<annotate::Annotator>(const ScenarioSpec&)>;

struct PriorityRow {
  std::string variant;
  std::string user_specification;
  sim::WindowMetrics metrics;  // ns_share is the headline number
};

// One RLAIF run per user specification of a variants scenario file.
// Artifacts land in options.out_dir/<variant>/.
std::vector<PriorityRow> run_priority_suite(const std::string& scenario_path,
                                            uint64_t master_seed,
                                            const AnnotatorFactory& make_annotator,
                                            const RunOptions& options);

}  // namespace motsc::orchestrator
