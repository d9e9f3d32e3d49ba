#pragma once

#include <string>
#include <vector>

#include "motsc/sim/types.hpp"

namespace motsc::orchestrator {

// Scripted-teacher scalarization g(σ) = Σ_t Σ_m w_m · metric_m(t). Used by
// the oracle annotator; weights live in the scenario file so CI runs need no
// LLM endpoint.
struct OracleSpec {
  double w_throughput = 0.0;
  double w_co2_rate = 0.0;
  double w_ns = 0.0;  // weight on N/S exits per step
  double w_ew = 0.0;
  // When set, throughput/co2_rate are z-scored across the batch of segments
  // being compared before weighting (puts the two metrics on one scale).
  bool zscore_metrics = false;
  // Tie threshold ε as a fraction of std(g) over the comparison batch.
  double tie_epsilon_frac = 0.02;

  void validate() const;
};

struct RunSchedule {
  long long run_steps = 100000;
  long long feedback_period = 5000;
  int annotation_batch = 1024;
  int oversample = 5;
  long long bootstrap_steps = 5000;
  int segment_len = 1;  // H

  void validate() const;

  // Feedback sessions fire at every multiple s of feedback_period with
  // bootstrap_steps <= s <= run_steps; a run no longer than the bootstrap
  // has none (pure proxy-reward training).
  std::vector<long long> session_steps() const;
};

struct ScenarioSpec {
  std::string name;
  std::string variant;  // lane-priorities variant, empty otherwise
  sim::SimConfig sim_config;
  std::vector<std::string> objectives;
  std::string user_specification;
  OracleSpec oracle;
  RunSchedule schedule;
  uint64_t master_seed = 0;

  void validate() const;
};

// Scenario files are JSON (assets/scenarios/*.json). Files with a "variants"
// table require a variant name selecting the user specification and oracle
// weights; files without one reject a non-empty variant.
ScenarioSpec parse_scenario(const std::string& json_text, const std::string& variant = "");
ScenarioSpec load_scenario_file(const std::string& path, const std::string& variant = "");
std::vector<std::string> scenario_variants(const std::string& path);

}  // namespace motsc::orchestrator
