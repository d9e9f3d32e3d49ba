#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "motsc/annotate/llm.hpp"
#include "motsc/annotate/oracle.hpp"
#include "motsc/orchestrator/run.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using namespace motsc;
using orchestrator::RunOptions;
using orchestrator::ScenarioSpec;

namespace {

// ---- config tree -----------------------------------------------------------
// A run is described by a single JSON tree; CLI flags override matching keys.
// Only the knobs people actually sweep get flags, everything else (dqn,
// reward-model, eval cadence) lives in the tree.

json load_config_tree(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream is(path);
  if (!is) throw config_error("cannot open config file " + path);
  try {
    json j;
    is >> j;
    if (!j.is_object()) throw config_error("config file must hold a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw config_error("bad JSON in " + path + ": " + e.what());
  }
}

// Value priority: explicit flag > config tree > built-in default (already in
// `var`). `sub.count(flag)` tells us whether the user typed the flag.
template <typename T>
void cfg_fill(const CLI::App& sub, const char* flag, const json& tree, const char* key,
              T& var) {
  if (sub.count(flag) == 0 && tree.contains(key)) {
    try {
      var = tree.at(key).get<T>();
    } catch (const json::exception& e) {
      throw config_error(std::string("config key '") + key + "': " + e.what());
    }
  }
}

const json& subtree(const json& tree, const char* key) {
  static const json empty = json::object();
  if (!tree.contains(key)) return empty;
  const json& t = tree.at(key);
  if (!t.is_object()) throw config_error(std::string("config key '") + key + "' must be an object");
  return t;
}

void fill_run_options(const json& tree, RunOptions& opts) {
  const json& run = subtree(tree, "run");
  if (run.contains("updates_per_step")) opts.updates_per_step = run.at("updates_per_step");
  if (run.contains("learn_start")) opts.learn_start = run.at("learn_start");
  if (run.contains("eval_every")) opts.eval_every = run.at("eval_every");
  if (run.contains("eval_episodes")) opts.eval_episodes = run.at("eval_episodes");

  const json& dqn = subtree(tree, "dqn");
  if (dqn.contains("gamma")) opts.dqn.gamma = dqn.at("gamma");
  if (dqn.contains("batch_size")) opts.dqn.batch_size = dqn.at("batch_size");
  if (dqn.contains("target_sync_every")) opts.dqn.target_sync_every = dqn.at("target_sync_every");
  if (dqn.contains("eps_start")) opts.dqn.eps_start = dqn.at("eps_start");
  if (dqn.contains("eps_end")) opts.dqn.eps_end = dqn.at("eps_end");
  if (dqn.contains("eps_decay_steps")) opts.dqn.eps_decay_steps = dqn.at("eps_decay_steps");
  if (dqn.contains("huber_delta")) opts.dqn.huber_delta = dqn.at("huber_delta");
  if (dqn.contains("double_dqn")) opts.dqn.double_dqn = dqn.at("double_dqn");
  if (dqn.contains("lr")) opts.dqn.opt.lr = dqn.at("lr");
  if (dqn.contains("weight_decay")) opts.dqn.opt.weight_decay = dqn.at("weight_decay");

  const json& reward = subtree(tree, "reward");
  if (reward.contains("beta")) opts.reward.beta = reward.at("beta");
  if (reward.contains("members")) opts.reward.members = reward.at("members");
  if (reward.contains("epochs")) opts.reward.epochs = reward.at("epochs");
  if (reward.contains("batch_size")) opts.reward.batch_size = reward.at("batch_size");
  if (reward.contains("lr")) opts.reward.opt.lr = reward.at("lr");
  if (reward.contains("weight_decay")) opts.reward.opt.weight_decay = reward.at("weight_decay");
}

// ---- shared flag bundles ---------------------------------------------------

struct ScenarioFlags {
  std::string scenario;
  std::string variant;
  uint64_t seed = 0;
  long long steps = 0;  // 0: keep the scenario's run length
  bool fast = false;
  std::string out;
  std::string config;
  bool quiet = false;
};

void add_scenario_flags(CLI::App* sub, ScenarioFlags& f, bool scenario_required = true) {
  auto* s = sub->add_option("--scenario", f.scenario, "scenario JSON file");
  if (scenario_required) s->required();
  sub->add_option("--variant", f.variant, "variant name for scenario files with variants");
  sub->add_option("--seed", f.seed, "master seed; all RNG streams derive from it");
  sub->add_option("--steps", f.steps, "override total environment steps");
  sub->add_flag("--fast", f.fast, "CI-scale profile: 2000 s episodes, 20k steps");
  sub->add_option("--out", f.out, "run directory (omit for an in-memory run)");
  sub->add_option("--config", f.config, "JSON config tree; flags override its keys");
  sub->add_flag("--quiet", f.quiet, "suppress progress lines");
}

void merge_scenario_flags(const CLI::App& sub, const json& tree, ScenarioFlags& f) {
  cfg_fill(sub, "--scenario", tree, "scenario", f.scenario);
  cfg_fill(sub, "--variant", tree, "variant", f.variant);
  cfg_fill(sub, "--seed", tree, "seed", f.seed);
  cfg_fill(sub, "--steps", tree, "steps", f.steps);
  cfg_fill(sub, "--fast", tree, "fast", f.fast);
  cfg_fill(sub, "--out", tree, "out", f.out);
  cfg_fill(sub, "--quiet", tree, "quiet", f.quiet);
}

struct LlmFlags {
  std::string endpoint = "http://127.0.0.1:8000";
  std::string model = "gpt-4o-mini";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string prompt = "assets/prompts/annotation.txt";
  int timeout_seconds = 60;
  int max_attempts = 3;
  int parallel = 8;
};

void add_llm_flags(CLI::App* sub, LlmFlags& f) {
  sub->add_option("--endpoint", f.endpoint, "chat-completions base URL");
  sub->add_option("--model", f.model, "model name sent in the request");
  sub->add_option("--api-key-env", f.api_key_env,
                  "env var holding the bearer token (header omitted if unset)");
  sub->add_option("--prompt", f.prompt, "annotation prompt template");
  sub->add_option("--timeout", f.timeout_seconds, "per-request timeout, seconds");
  sub->add_option("--attempts", f.max_attempts, "attempts per query before label 0");
  sub->add_option("--parallel", f.parallel, "concurrent annotation requests");
}

void merge_llm_flags(const CLI::App& sub, const json& tree, LlmFlags& f) {
  const json& llm = subtree(tree, "llm");
  cfg_fill(sub, "--endpoint", llm, "endpoint", f.endpoint);
  cfg_fill(sub, "--model", llm, "model", f.model);
  cfg_fill(sub, "--api-key-env", llm, "api_key_env", f.api_key_env);
  cfg_fill(sub, "--prompt", llm, "prompt", f.prompt);
  cfg_fill(sub, "--timeout", llm, "timeout_seconds", f.timeout_seconds);
  cfg_fill(sub, "--attempts", llm, "max_attempts", f.max_attempts);
  cfg_fill(sub, "--parallel", llm, "parallel", f.parallel);
}

std::unique_ptr<annotate::Annotator> make_annotator(const std::string& kind,
                                                    const ScenarioSpec& spec,
                                                    const LlmFlags& llm) {
  if (kind == "oracle") return std::make_unique<annotate::OracleAnnotator>(spec);
  if (kind == "llm") {
    annotate::LlmConfig cfg;
    cfg.chat.endpoint = llm.endpoint;
    cfg.chat.model = llm.model;
    cfg.chat.api_key_env = llm.api_key_env;
    cfg.chat.timeout_seconds = llm.timeout_seconds;
    cfg.prompt_path = llm.prompt;
    cfg.max_attempts = llm.max_attempts;
    cfg.parallel_requests = llm.parallel;
    return std::make_unique<annotate::LlmAnnotator>(spec, cfg);
  }
  throw config_error("unknown annotator '" + kind + "' (oracle, llm)");
}

// Snapshot the inputs a rerun needs next to the artifacts they produced.
void snapshot_inputs(const std::string& out_dir, const std::string& scenario_path,
                     const std::string& config_path) {
  if (out_dir.empty()) return;
  fs::create_directories(out_dir);
  const auto copy_as = [&](const std::string& src, const char* name) {
    if (src.empty()) return;
    std::error_code ec;
    fs::copy_file(src, fs::path(out_dir) / name, fs::copy_options::overwrite_existing, ec);
  };
  copy_as(scenario_path, "scenario.json");
  copy_as(config_path, "config.json");
}

void print_final(const sim::WindowMetrics& m) {
  std::printf("final eval: throughput/step=%.4f co2=%.3f g/s queue=%.2f ns_share=%.4f "
              "ew_share=%.4f\n",
              m.mean_throughput, m.mean_co2_rate, m.mean_queue, m.ns_share, m.ew_share);
}

// ---- subcommands -----------------------------------------------------------

int cmd_train(const CLI::App& sub, ScenarioFlags& f, LlmFlags& llm, std::string& annotator,
              bool resume) {
  const json tree = load_config_tree(f.config);
  merge_scenario_flags(sub, tree, f);
  merge_llm_flags(sub, tree, llm);
  cfg_fill(sub, "--annotator", tree, "annotator", annotator);

  RunOptions opts;
  opts.verbose = !f.quiet;
  opts.fast = f.fast;
  opts.out_dir = f.out;
  opts.resume = resume;
  fill_run_options(tree, opts);
  ScenarioSpec spec = orchestrator::load_scenario_file(f.scenario, f.variant);
  spec.master_seed = f.seed;
  if (f.fast) orchestrator::apply_fast_profile(spec, opts);
  if (f.steps > 0) spec.schedule.run_steps = f.steps;

  const auto teacher = make_annotator(annotator, spec, llm);
  snapshot_inputs(f.out, f.scenario, f.config);
  const auto r = orchestrator::run_rlaif(spec, *teacher, opts);

  std::printf("done: %lld env steps, %zu sessions, %lld annotation requests%s\n",
              r.env_steps, r.sessions.size(), r.annotation_requests,
              r.halted ? " (halted)" : "");
  print_final(r.final_eval);
  if (!r.out_dir.empty()) std::printf("artifacts: %s\n", r.out_dir.c_str());
  return 0;
}

int cmd_baseline(const CLI::App& sub, ScenarioFlags& f, std::string& kind, double& alpha,
                 int& fixed_green, bool grid) {
  const json tree = load_config_tree(f.config);
  merge_scenario_flags(sub, tree, f);
  const json& bl_tree = subtree(tree, "baseline");
  cfg_fill(sub, "--kind", bl_tree, "kind", kind);
  cfg_fill(sub, "--alpha", bl_tree, "alpha", alpha);
  cfg_fill(sub, "--fixed-green", bl_tree, "fixed_green_seconds", fixed_green);

  RunOptions opts;
  opts.verbose = !f.quiet;
  opts.fast = f.fast;
  opts.out_dir = f.out;
  fill_run_options(tree, opts);
  ScenarioSpec spec = orchestrator::load_scenario_file(f.scenario, f.variant);
  spec.master_seed = f.seed;
  if (f.fast) orchestrator::apply_fast_profile(spec, opts);
  if (f.steps > 0) spec.schedule.run_steps = f.steps;
  snapshot_inputs(f.out, f.scenario, f.config);

  if (grid) {
    if (kind != "linear") throw config_error("--grid only applies to --kind linear");
    const auto g = orchestrator::grid_search_linear(spec, opts);
    std::printf("alpha  throughput  co2_rate  queue\n");
    for (const auto& row : g.rows)
      std::printf("%.1f    %.4f     %.3f    %.2f\n", row.alpha,
                  row.metrics.mean_throughput, row.metrics.mean_co2_rate,
                  row.metrics.mean_queue);
    std::printf("best alpha: %.1f (max throughput with co2 within 10%% of grid min)\n",
                g.best_alpha);
    return 0;
  }

  orchestrator::BaselineSpec bl;
  bl.kind = orchestrator::baseline_kind_from_string(kind);
  bl.alpha = alpha;
  bl.fixed_green_seconds = fixed_green;
  const auto r = orchestrator::run_baseline(spec, bl, opts);
  std::printf("done: %s baseline, %lld env steps\n", bl.label().c_str(), r.env_steps);
  print_final(r.final_eval);
  return 0;
}

int cmd_priority_suite(const CLI::App& sub, ScenarioFlags& f, LlmFlags& llm,
                       std::string& annotator) {
  const json tree = load_config_tree(f.config);
  merge_scenario_flags(sub, tree, f);
  merge_llm_flags(sub, tree, llm);
  cfg_fill(sub, "--annotator", tree, "annotator", annotator);
  if (f.steps > 0) throw config_error("priority-suite uses the scenario's run length; --steps is not supported");
  if (!f.variant.empty()) throw config_error("priority-suite runs every variant; --variant is not supported");

  RunOptions opts;
  opts.verbose = !f.quiet;
  opts.fast = f.fast;
  opts.out_dir = f.out;
  fill_run_options(tree, opts);
  snapshot_inputs(f.out, f.scenario, f.config);

  const std::string annotator_kind = annotator;
  const LlmFlags llm_flags = llm;
  const auto rows = orchestrator::run_priority_suite(
      f.scenario, f.seed,
      [&](const ScenarioSpec& s) { return make_annotator(annotator_kind, s, llm_flags); },
      opts);

  std::printf("%-12s %-8s %-8s %s\n", "variant", "ns", "ew", "user specification");
  for (const auto& row : rows)
    std::printf("%-12s %-8.4f %-8.4f %s\n", row.variant.c_str(), row.metrics.ns_share,
                row.metrics.ew_share, row.user_specification.c_str());
  return 0;
}

int cmd_annotate(const CLI::App& sub, ScenarioFlags& f, LlmFlags& llm,
                 std::string& annotator, const std::string& pairs_path,
                 const std::string& labels_out, bool agreement) {
  const json tree = load_config_tree(f.config);
  merge_scenario_flags(sub, tree, f);
  merge_llm_flags(sub, tree, llm);
  cfg_fill(sub, "--annotator", tree, "annotator", annotator);

  const ScenarioSpec spec = orchestrator::load_scenario_file(f.scenario, f.variant);
  pref::PreferenceBuffer pairs;
  pairs.load_jsonl_file(pairs_path);
  if (pairs.size() == 0) throw config_error("no pairs in " + pairs_path);

  std::vector<annotate::SegmentPairQuery> queries;
  queries.reserve(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) queries.push_back({pairs[i].first, pairs[i].second});

  const auto teacher = make_annotator(annotator, spec, llm);
  const auto results = teacher->annotate_batch(queries);

  if (!labels_out.empty()) {
    std::ofstream os(labels_out);
    if (!os) throw config_error("cannot write " + labels_out);
    for (size_t i = 0; i < results.size(); ++i) {
      json j;
      j["i"] = i;
      j["label"] = results[i].label;
      j["error"] = results[i].error;
      j["response"] = results[i].response;
      os << j.dump() << '\n';
    }
  }

  size_t hist[3] = {0, 0, 0};
  size_t errors = 0;
  for (const auto& r : results) {
    ++hist[r.label];
    if (r.error) ++errors;
  }
  std::printf("%zu pairs: label1=%zu label2=%zu tie=%zu errors=%zu\n", results.size(),
              hist[1], hist[2], hist[0], errors);

  if (agreement && annotator != "oracle") {
    annotate::OracleAnnotator oracle(spec);
    const auto truth = oracle.annotate_batch(queries);
    size_t match = 0;
    for (size_t i = 0; i < results.size(); ++i)
      if (results[i].label == truth[i].label) ++match;
    std::printf("agreement with oracle: %zu/%zu = %.12g\n", match, results.size(),
                static_cast<double>(match) / static_cast<double>(results.size()));
  }
  if (!labels_out.empty()) std::printf("labels: %s\n", labels_out.c_str());
  return 0;
}

int cmd_report(const std::string& run_dir) {
  const std::string manifest_path = run_dir + "/manifest.json";
  std::ifstream is(manifest_path);
  if (!is) throw config_error("no manifest.json in " + run_dir + "; not a run directory?");
  json m;
  try {
    is >> m;
  } catch (const json::exception& e) {
    throw config_error("bad manifest in " + run_dir + ": " + e.what());
  }

  const auto str = [&](const char* key) { return m.value(key, std::string("-")); };
  std::printf("run: %s\n", run_dir.c_str());
  std::printf("command: %s  scenario: %s  variant: %s\n", str("command").c_str(),
              str("scenario").c_str(),
              m.value("variant", std::string()).empty() ? "-" : str("variant").c_str());
  const std::string baseline_note =
      m.contains("baseline") ? "  baseline: " + str("baseline") : std::string();
  std::printf("annotator: %s%s  seed: %" PRIu64 "  fast: %s  status: %s\n",
              str("annotator").c_str(), baseline_note.c_str(),
              m.value("master_seed", uint64_t{0}), m.value("fast", false) ? "yes" : "no",
              str("status").c_str());
  std::printf("git: %s  started: %s  finished: %s\n", str("git").c_str(),
              str("started_at").c_str(), str("finished_at").c_str());
  std::printf("env steps: %lld\n", m.value("env_steps", 0LL));

  if (m.contains("final_eval")) {
    const auto& fe = m.at("final_eval");
    std::printf("final eval: throughput/step=%.12g co2=%.12g g/s queue=%.12g "
                "ns_share=%.12g ew_share=%.12g\n",
                fe.value("throughput", 0.0), fe.value("co2_rate", 0.0),
                fe.value("queue", 0.0), fe.value("ns_share", 0.0),
                fe.value("ew_share", 0.0));
  }

  // Annotation economics.
  const long long requested = m.value("requests_total", 0LL);
  std::printf("annotation requests: %lld  replayed: %lld  response chars: %lld\n",
              requested, m.value("requests_replayed", 0LL), m.value("response_chars", 0LL));
  if (m.contains("sessions") && !m.at("sessions").empty()) {
    std::printf("sessions:\n");
    long long stored = 0, ties = 0, errors = 0, asked = 0;
    for (const auto& s : m.at("sessions")) {
      std::printf("  %2d @%-7lld asked=%lld stored=%lld ties=%lld errors=%lld "
                  "tie_frac=%.4f reward_loss %.4f -> %.4f\n",
                  s.value("session", 0), s.value("step", 0LL), s.value("requested", 0LL),
                  s.value("stored", 0LL), s.value("ties", 0LL), s.value("errors", 0LL),
                  s.value("tie_fraction", 0.0), s.value("reward_loss_first", 0.0),
                  s.value("reward_loss_last", 0.0));
      asked += s.value("requested", 0LL);
      stored += s.value("stored", 0LL);
      ties += s.value("ties", 0LL);
      errors += s.value("errors", 0LL);
    }
    if (asked > 0)
      std::printf("overall filter rate: %.12g (stored %lld of %lld)\n",
                  static_cast<double>(ties + errors) / static_cast<double>(asked), stored,
                  asked);
  }

  // Column means recomputed from the metric rows.
  const std::string csv_path = run_dir + "/metrics.csv";
  std::ifstream csv(csv_path);
  if (csv) {
    std::string line;
    std::getline(csv, line);  // header
    std::vector<std::string> cols;
    {
      std::stringstream hs(line);
      std::string c;
      while (std::getline(hs, c, ',')) cols.push_back(c);
    }
    std::vector<double> sums(cols.size(), 0.0);
    size_t rows = 0;
    while (std::getline(csv, line)) {
      if (line.empty()) continue;
      std::stringstream ls(line);
      std::string cell;
      for (size_t i = 0; i < cols.size() && std::getline(ls, cell, ','); ++i)
        sums[i] += std::stod(cell);
      ++rows;
    }
    if (rows > 0) {
      std::printf("csv means over %zu evals:\n", rows);
      for (size_t i = 1; i < cols.size(); ++i)  // skip the step column
        std::printf("  %s=%.12g\n", cols[i].c_str(),
                    sums[i] / static_cast<double>(rows));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-objective traffic signal control trained from preference feedback"};
  app.require_subcommand(1);

  ScenarioFlags train_f, base_f, suite_f, ann_f;
  LlmFlags train_llm, suite_llm, ann_llm;
  std::string train_annotator = "oracle", suite_annotator = "oracle",
              ann_annotator = "oracle";
  bool train_resume = false;

  auto* train = app.add_subcommand("train", "run RLAIF training");
  add_scenario_flags(train, train_f);
  add_llm_flags(train, train_llm);
  train->add_option("--annotator", train_annotator, "preference teacher: oracle or llm");
  train->add_flag("--resume", train_resume, "continue from the run directory's checkpoint");

  std::string base_kind = "linear";
  double base_alpha = 0.7;
  int base_fixed_green = 30;
  bool base_grid = false;
  auto* baseline = app.add_subcommand("baseline", "run a fixed-reward baseline");
  add_scenario_flags(baseline, base_f);
  baseline->add_option("--kind", base_kind,
                       "linear, throughput, emission, fixed_cycle, random");
  baseline->add_option("--alpha", base_alpha, "linear scalarization weight");
  baseline->add_option("--fixed-green", base_fixed_green, "fixed-cycle phase hold, seconds");
  baseline->add_flag("--grid", base_grid, "sweep alpha 0.1..0.9 and pick the best");

  auto* suite = app.add_subcommand("priority-suite",
                                   "one RLAIF run per variant of a variants scenario");
  add_scenario_flags(suite, suite_f);
  add_llm_flags(suite, suite_llm);
  suite->add_option("--annotator", suite_annotator, "preference teacher: oracle or llm");

  std::string pairs_path, labels_out;
  bool agreement = false;
  auto* annotate = app.add_subcommand("annotate", "annotate a serialized pair file offline");
  add_scenario_flags(annotate, ann_f);
  add_llm_flags(annotate, ann_llm);
  annotate->add_option("--annotator", ann_annotator, "preference teacher: oracle or llm");
  annotate->add_option("--pairs", pairs_path, "segment-pair JSONL (preferences.jsonl format)")
      ->required();
  annotate->add_option("--labels-out", labels_out, "write per-pair labels JSONL here");
  annotate->add_flag("--agreement", agreement, "also report agreement with the oracle");

  std::string run_dir;
  auto* report = app.add_subcommand("report", "summarize a finished run directory");
  report->add_option("--run", run_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed())
      return cmd_train(*train, train_f, train_llm, train_annotator, train_resume);
    if (baseline->parsed())
      return cmd_baseline(*baseline, base_f, base_kind, base_alpha, base_fixed_green,
                          base_grid);
    if (suite->parsed()) return cmd_priority_suite(*suite, suite_f, suite_llm, suite_annotator);
    if (annotate->parsed())
      return cmd_annotate(*annotate, ann_f, ann_llm, ann_annotator, pairs_path, labels_out,
                          agreement);
    if (report->parsed()) return cmd_report(run_dir);
  } catch (const config_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
