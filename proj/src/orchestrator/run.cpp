#include "motsc/orchestrator/run.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "motsc/annotate/log.hpp"
#include "motsc/core/rng.hpp"
#include "motsc/orchestrator/standardize.hpp"
#include "motsc/pref/query.hpp"
#include "motsc/pref/segment.hpp"
#include "motsc/sim/intersection.hpp"

namespace motsc::orchestrator {

using nlohmann::json;

void RunOptions::validate() const {
  if (updates_per_step < 0) throw config_error("run: updates_per_step must be >= 0");
  if (learn_start < 1) throw config_error("run: learn_start must be >= 1");
  if (eval_every < 1) throw config_error("run: eval_every must be >= 1");
  if (eval_episodes < 1) throw config_error("run: eval_episodes must be >= 1");
  if (halt_after_session == 0) throw config_error("run: halt_after_session must be >= 1");
  dqn.validate();
  reward.validate();
}

void apply_fast_profile(ScenarioSpec& spec, RunOptions& options) {
  spec.sim_config.episode_seconds = 2000.0;
  spec.schedule.run_steps = 20000;
  options.dqn.eps_decay_steps = 6000;
  options.fast = true;
}

void BaselineSpec::validate() const {
  if (kind == BaselineKind::Linear) {
    // The paper's grid; values off it are almost always a typo'd flag.
    const double steps = alpha * 10.0;
    if (alpha < 0.05 || alpha > 0.95 || std::abs(steps - std::round(steps)) > 1e-9)
      throw config_error("baseline: alpha must lie on the grid {0.1, 0.2, ..., 0.9}");
  }
  if (fixed_green_seconds < 1) throw config_error("baseline: fixed green must be >= 1s");
}

std::string BaselineSpec::label() const {
  switch (kind) {
    case BaselineKind::Linear: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "linear_%.1f", alpha);
      return buf;
    }
    case BaselineKind::Throughput: return "throughput";
    case BaselineKind::Emission: return "emission";
    case BaselineKind::FixedCycle: return "fixed_cycle";
    case BaselineKind::Random: return "random";
  }
  throw contract_error("baseline: unknown kind");
}

BaselineKind baseline_kind_from_string(const std::string& name) {
  if (name == "linear") return BaselineKind::Linear;
  if (name == "throughput") return BaselineKind::Throughput;
  if (name == "emission") return BaselineKind::Emission;
  if (name == "fixed_cycle" || name == "fixed") return BaselineKind::FixedCycle;
  if (name == "random") return BaselineKind::Random;
  throw config_error("baseline: unknown kind '" + name +
                     "' (linear, throughput, emission, fixed_cycle, random)");
}

namespace {

constexpr char kStateMagic[8] = {'M', 'O', 'T', 'S', 'C', 'T', 'S', '1'};

void put_i64(std::ostream& os, int64_t v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}
void put_u64(std::ostream& os, uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}
void put_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }

int64_t get_i64(std::istream& is) {
  int64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 8)) throw config_error("run state: truncated");
  return v;
}
uint64_t get_u64(std::istream& is) {
  uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 8)) throw config_error("run state: truncated");
  return v;
}
double get_f64(std::istream& is) {
  double v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 8)) throw config_error("run state: truncated");
  return v;
}

std::string now_iso() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string git_describe() {
  std::string out;
  if (FILE* p = popen("git describe --always --dirty 2>/dev/null", "r")) {
    char buf[128];
    while (fgets(buf, sizeof(buf), p)) out += buf;
    pclose(p);
  }
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out.empty() ? "unknown" : out;
}

json metrics_json(const sim::WindowMetrics& m) {
  return {{"throughput", m.mean_throughput},
          {"co2_rate", m.mean_co2_rate},
          {"queue", m.mean_queue},
          {"ns_share", m.ns_share},
          {"ew_share", m.ew_share}};
}

enum class Mode { Rlaif, Linear, Throughput, Emission, FixedCycle, Random };

Mode mode_of(const BaselineSpec& b) {
  switch (b.kind) {
    case BaselineKind::Linear: return Mode::Linear;
    case BaselineKind::Throughput: return Mode::Throughput;
    case BaselineKind::Emission: return Mode::Emission;
    case BaselineKind::FixedCycle: return Mode::FixedCycle;
    case BaselineKind::Random: return Mode::Random;
  }
  throw contract_error("baseline: unknown kind");
}

bool is_learned(Mode m) { return m != Mode::FixedCycle && m != Mode::Random; }

// One training run: environment stepping, reward assignment, DQN updates,
// feedback sessions (RLAIF mode), periodic greedy evaluation, artifacts.
class Engine {
 public:
  Engine(ScenarioSpec scenario, RunOptions options, Mode mode, BaselineSpec baseline,
         annotate::Annotator* annotator)
      : scenario_(std::move(scenario)),
        opt_(std::move(options)),
        mode_(mode),
        baseline_(std::move(baseline)),
        annotator_(annotator),
        sim_(scenario_.sim_config),
        policy_rng_(core::derive_seed(scenario_.master_seed, "baseline_policy", 0)) {
    const auto& sched = scenario_.schedule;
    if (mode_ == Mode::Rlaif) session_steps_ = sched.session_steps();
    for (long long s = opt_.eval_every; s < sched.run_steps; s += opt_.eval_every)
      eval_points_.push_back(s);
    eval_points_.push_back(sched.run_steps);

    if (is_learned(mode_)) {
      buffer_ = std::make_unique<agent::ReplayBuffer>(
          sim::kObsDim, static_cast<size_t>(sched.run_steps));
      agent_ = std::make_unique<agent::DqnAgent>(
          sim::kObsDim, sim::kNumPhases,
          core::derive_seed(scenario_.master_seed, "agent", 0), opt_.dqn);
    }
    if (mode_ == Mode::Rlaif)
      ensemble_ = std::make_unique<pref::RewardEnsemble>(
          sim::kObsDim, sim::kNumPhases,
          core::derive_seed(scenario_.master_seed, "ensemble", 0), opt_.reward);

    started_at_ = now_iso();
    git_ = git_describe();
    setup_artifacts();
  }

  RunResult run() {
    const long long run_steps = scenario_.schedule.run_steps;
    while (true) {
      if (mode_ == Mode::Rlaif &&
          sessions_completed_ < static_cast<int>(session_steps_.size()) &&
          env_step_ == session_steps_[static_cast<size_t>(sessions_completed_)]) {
        run_session();
        if (halted_) break;
      }
      if (evals_done_ < static_cast<long long>(eval_points_.size()) &&
          env_step_ == eval_points_[static_cast<size_t>(evals_done_)]) {
        run_eval();
      }
      if (env_step_ >= run_steps) break;
      step_env();
    }
    write_manifest(halted_ ? "halted" : "finished");

    RunResult result;
    result.out_dir = dir_;
    result.env_steps = env_step_;
    result.halted = halted_;
    result.sessions = sessions_;
    result.evals = evals_;
    if (!evals_.empty()) result.final_eval = evals_.back().metrics;
    result.annotation_requests = static_cast<long long>(log_.records().size());
    return result;
  }

 private:
  // ---- environment loop ----

  void step_env() {
    if (fresh_ || sim_.done()) {
      obs_ = sim_.reset(core::derive_seed(scenario_.master_seed, "episode",
                                          static_cast<uint64_t>(episode_index_)));
      ++episode_index_;
      step_in_episode_ = 0;
      fresh_ = false;
    }
    int action = 0;
    switch (mode_) {
      case Mode::FixedCycle:
        action = fixed_cycle_action(step_in_episode_);
        break;
      case Mode::Random:
        action = policy_rng_.uniform_int(0, sim::kNumPhases - 1);
        break;
      default:
        action = agent_->select_action(obs_);
        break;
    }
    const auto sr = sim_.step(action);
    if (buffer_) {
      buffer_->push(obs_, action, sr.obs, sr.done, sr.metrics);
      assign_reward(buffer_->size() - 1, sr.metrics);
    }
    ++env_step_;
    ++step_in_episode_;
    obs_ = sr.obs;

    if (agent_ && buffer_ && static_cast<long long>(buffer_->size()) >= opt_.learn_start) {
      for (int u = 0; u < opt_.updates_per_step; ++u) {
        dqn_loss_sum_ += agent_->dqn_update(*buffer_);
        ++dqn_loss_n_;
      }
    }
  }

  void assign_reward(size_t i, const sim::StepMetrics& m) {
    switch (mode_) {
      case Mode::Rlaif:
        if (ensemble_ready_) {
          ensemble_->relabel_tail(*buffer_, i);
        } else {
          const double raw = -static_cast<double>(m.total_queue);
          buffer_->set_reward(i, raw, proxy_std_.push(raw), 0);
        }
        break;
      case Mode::Linear: {
        const double z1 = lin_thr_.push(static_cast<double>(m.throughput));
        const double z2 = lin_co2_.push(m.co2_rate);
        const double r = baseline_.alpha * z1 - (1.0 - baseline_.alpha) * z2;
        buffer_->set_reward(i, r, r, 0);
        break;
      }
      case Mode::Throughput:
        buffer_->set_reward(i, m.throughput, m.throughput, 0);
        break;
      case Mode::Emission:
        buffer_->set_reward(i, -m.co2_rate, -m.co2_rate, 0);
        break;
      default:
        break;
    }
  }

  int fixed_cycle_action(long long step_in_episode) const {
    const long long sec = step_in_episode * scenario_.sim_config.step_seconds;
    return static_cast<int>((sec / baseline_.fixed_green_seconds) %
                            static_cast<long long>(sim::kNumPhases));
  }

  // ---- feedback session ----

  void run_session() {
    const int session = sessions_completed_ + 1;
    const auto& sched = scenario_.schedule;
    const int h = sched.segment_len;

    const auto eligible = pref::eligible_segment_starts(*buffer_, h);
    core::Rng query_rng(core::derive_seed(scenario_.master_seed, "query",
                                          static_cast<uint64_t>(session)));
    const auto candidates = pref::sample_candidate_pairs(
        eligible, sched.annotation_batch * sched.oversample, query_rng);
    const auto scores = pref::pairwise_disagreement(*ensemble_, *buffer_, candidates, h);
    const auto top = pref::top_disagreement(scores, sched.annotation_batch);

    std::vector<pref::CandidatePair> starts;
    std::vector<annotate::SegmentPairQuery> queries;
    starts.reserve(top.size());
    queries.reserve(top.size());
    for (const size_t idx : top) {
      const auto& c = candidates[idx];
      starts.push_back(c);
      queries.push_back({pref::extract_segment(*buffer_, c.start1, h),
                         pref::extract_segment(*buffer_, c.start2, h)});
    }

    // Journal replay: answers already paid for are reused (LLM) or
    // re-derived and cross-checked (deterministic teachers).
    const auto logged = log_.session_records(session);
    if (logged.size() > queries.size())
      throw config_error("run: annotation journal has more entries for session " +
                         std::to_string(session) + " than the schedule allows");
    for (size_t i = 0; i < logged.size(); ++i) {
      if (logged[i].index != static_cast<int>(i) ||
          logged[i].start1 != static_cast<int64_t>(starts[i].start1) ||
          logged[i].start2 != static_cast<int64_t>(starts[i].start2))
        throw config_error("run: annotation journal does not match this run's queries; "
                           "wrong seed or scenario?");
    }

    std::vector<annotate::AnnotationResult> results(queries.size());
    if (annotator_->deterministic()) {
      results = annotate_or_halt(queries, session);
      halt_if_all_failed(results, session);
      for (size_t i = 0; i < logged.size(); ++i)
        if (logged[i].label != results[i].label)
          throw config_error("run: journaled label differs from the deterministic "
                             "annotator's answer; wrong seed or scenario?");
    } else {
      for (size_t i = 0; i < logged.size(); ++i)
        results[i] = {logged[i].label, logged[i].error, logged[i].response};
      if (logged.size() < queries.size()) {
        const std::vector<annotate::SegmentPairQuery> fresh(
            queries.begin() + static_cast<std::ptrdiff_t>(logged.size()), queries.end());
        const auto fresh_results = annotate_or_halt(fresh, session);
        halt_if_all_failed(fresh_results, session);
        std::copy(fresh_results.begin(), fresh_results.end(),
                  results.begin() + static_cast<std::ptrdiff_t>(logged.size()));
      }
    }
    for (size_t i = logged.size(); i < results.size(); ++i) {
      log_.append({session, static_cast<int>(i), static_cast<int64_t>(starts[i].start1),
                   static_cast<int64_t>(starts[i].start2), results[i].label,
                   results[i].error, results[i].response});
      response_chars_ += results[i].response.size();
    }
    replayed_total_ += logged.size();

    const auto stats = annotate::filter_and_store(queries, results, prefs_);
    const auto losses = ensemble_->train(
        prefs_, core::derive_seed(scenario_.master_seed, "reward_train",
                                  static_cast<uint64_t>(session)));
    const auto relabel = ensemble_->relabel_buffer(*buffer_);
    ensemble_ready_ = true;
    sessions_completed_ = session;

    SessionSummary summary;
    summary.session = session;
    summary.step = env_step_;
    summary.stats = stats;
    summary.replayed = logged.size();
    summary.reward_loss_first = losses.empty() ? 0.0 : losses.front();
    summary.reward_loss_last = losses.empty() ? 0.0 : losses.back();
    summary.relabel_mean = relabel.mean;
    summary.relabel_stdev = relabel.stdev;
    sessions_.push_back(summary);
    last_reward_loss_ = summary.reward_loss_last;

    save_checkpoint();
    if (opt_.verbose) {
      std::printf("[session %d @%lld] asked=%zu stored=%zu ties=%zu errors=%zu "
                  "filtered=%.1f%% replayed=%zu reward_loss %.4f -> %.4f\n",
                  session, env_step_, stats.total, stats.stored, stats.ties, stats.errors,
                  100.0 * stats.tie_fraction(), logged.size(), summary.reward_loss_first,
                  summary.reward_loss_last);
      std::fflush(stdout);
    }
    if (opt_.halt_after_session == session) halted_ = true;
  }

  std::vector<annotate::AnnotationResult> annotate_or_halt(
      const std::vector<annotate::SegmentPairQuery>& queries, int session) {
    try {
      return annotator_->annotate_batch(queries);
    } catch (const std::exception& e) {
      // Hard annotator failure: leave a resumable checkpoint behind. State is
      // still pre-session, so resuming re-runs this session from the journal.
      save_checkpoint();
      write_manifest("halted");
      throw std::runtime_error("run: annotator failed in session " +
                               std::to_string(session) + " (" + e.what() +
                               "); checkpoint written, rerun with resume");
    }
  }

  // Every single fresh request failing means the backend is down, not that
  // the segments were hard to judge. Halt before journaling so the budget
  // isn't burned on error labels; a resumed run re-asks the same queries.
  void halt_if_all_failed(const std::vector<annotate::AnnotationResult>& fresh,
                          int session) {
    if (fresh.empty()) return;
    for (const auto& r : fresh)
      if (!r.error) return;
    save_checkpoint();
    write_manifest("halted");
    throw std::runtime_error("run: all " + std::to_string(fresh.size()) +
                             " annotation requests of session " + std::to_string(session) +
                             " failed (" + fresh.front().response +
                             "); annotator unreachable? checkpoint written, rerun with "
                             "resume");
  }

  // ---- evaluation ----

  void run_eval() {
    std::vector<sim::StepMetrics> history;
    core::Rng eval_policy_rng(core::derive_seed(scenario_.master_seed, "eval_policy",
                                                static_cast<uint64_t>(eval_counter_)));
    for (int e = 0; e < opt_.eval_episodes; ++e) {
      sim::Intersection ev(scenario_.sim_config);
      auto obs = ev.reset(core::derive_seed(
          scenario_.master_seed, "eval",
          static_cast<uint64_t>(eval_counter_) * 1000003ULL + static_cast<uint64_t>(e)));
      long long t = 0;
      while (!ev.done()) {
        int action = 0;
        switch (mode_) {
          case Mode::FixedCycle:
            action = fixed_cycle_action(t);
            break;
          case Mode::Random:
            action = eval_policy_rng.uniform_int(0, sim::kNumPhases - 1);
            break;
          default:
            action = agent_->greedy_action(obs);
            break;
        }
        const auto sr = ev.step(action);
        history.push_back(sr.metrics);
        obs = sr.obs;
        ++t;
      }
    }
    ++eval_counter_;

    EvalPoint point;
    point.step = env_step_;
    point.metrics = sim::metrics_window(history, history.size());
    point.epsilon = agent_ ? agent_->epsilon() : 0.0;
    point.dqn_loss = dqn_loss_n_ > 0 ? dqn_loss_sum_ / static_cast<double>(dqn_loss_n_) : 0.0;
    point.reward_loss = last_reward_loss_;
    dqn_loss_sum_ = 0.0;
    dqn_loss_n_ = 0;
    evals_.push_back(point);
    ++evals_done_;

    append_metrics_row(point);
    if (opt_.verbose) {
      std::printf("[step %lld/%lld] eps=%.3f eval: thr/step=%.3f co2=%.2fg/s ns=%.3f "
                  "queue=%.1f dqn_loss=%.5f\n",
                  env_step_, scenario_.schedule.run_steps, point.epsilon,
                  point.metrics.mean_throughput, point.metrics.mean_co2_rate,
                  point.metrics.ns_share, point.metrics.mean_queue, point.dqn_loss);
      std::fflush(stdout);
    }
  }

  // ---- artifacts ----

  void setup_artifacts() {
    dir_ = opt_.out_dir;
    if (dir_.empty()) {
      if (opt_.resume) throw config_error("run: resume needs an output directory");
      return;
    }
    namespace fs = std::filesystem;
    fs::create_directories(dir_);
    manifest_path_ = dir_ + "/manifest.json";
    metrics_path_ = dir_ + "/metrics.csv";
    prefs_path_ = dir_ + "/preferences.jsonl";
    log_path_ = dir_ + "/annotations.jsonl";
    state_path_ = dir_ + "/train_state.bin";

    if (opt_.resume) {
      if (mode_ != Mode::Rlaif)
        throw config_error("run: resume is only supported for RLAIF training runs");
      if (!fs::exists(state_path_))
        throw config_error("run: no checkpoint to resume from in " + dir_);
      log_ = annotate::AnnotationLog(log_path_);
      if (fs::exists(prefs_path_)) prefs_.load_jsonl_file(prefs_path_);
      load_checkpoint();
    } else {
      if (fs::exists(manifest_path_))
        throw config_error("run: " + dir_ +
                           " already contains a run; resume it or pick a fresh directory");
      log_ = annotate::AnnotationLog(log_path_);
    }
    write_manifest("running");
  }

  void append_metrics_row(const EvalPoint& p) {
    if (dir_.empty()) return;
    namespace fs = std::filesystem;
    const bool fresh_file = !fs::exists(metrics_path_) || fs::file_size(metrics_path_) == 0;
    std::ofstream os(metrics_path_, std::ios::app);
    if (!os) throw config_error("run: cannot write " + metrics_path_);
    if (fresh_file)
      os << "step,throughput,co2_rate,ns_share,ew_share,queue,epsilon,dqn_loss,reward_loss\n";
    char row[256];
    std::snprintf(row, sizeof(row),
                  "%lld,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", p.step,
                  p.metrics.mean_throughput, p.metrics.mean_co2_rate, p.metrics.ns_share,
                  p.metrics.ew_share, p.metrics.mean_queue, p.epsilon, p.dqn_loss,
                  p.reward_loss);
    os << row;
  }

  void write_manifest(const std::string& status) {
    if (dir_.empty()) return;
    json j;
    j["schema"] = "motsc-run-v1";
    j["command"] = mode_ == Mode::Rlaif ? "train" : "baseline";
    j["scenario"] = scenario_.name;
    j["variant"] = scenario_.variant;
    j["annotator"] = annotator_ ? annotator_->name() : "none";
    if (mode_ != Mode::Rlaif) j["baseline"] = baseline_.label();
    j["master_seed"] = scenario_.master_seed;
    j["fast"] = opt_.fast;
    j["run_steps"] = scenario_.schedule.run_steps;
    j["feedback_period"] = scenario_.schedule.feedback_period;
    j["annotation_batch"] = scenario_.schedule.annotation_batch;
    j["oversample"] = scenario_.schedule.oversample;
    j["bootstrap_steps"] = scenario_.schedule.bootstrap_steps;
    j["segment_len"] = scenario_.schedule.segment_len;
    j["episode_seconds"] = scenario_.sim_config.episode_seconds;
    j["eval_every"] = opt_.eval_every;
    j["eval_episodes"] = opt_.eval_episodes;
    j["updates_per_step"] = opt_.updates_per_step;
    j["learn_start"] = opt_.learn_start;
    j["dqn"] = {{"gamma", opt_.dqn.gamma},
                {"batch_size", opt_.dqn.batch_size},
                {"target_sync_every", opt_.dqn.target_sync_every},
                {"eps_start", opt_.dqn.eps_start},
                {"eps_end", opt_.dqn.eps_end},
                {"eps_decay_steps", opt_.dqn.eps_decay_steps},
                {"huber_delta", opt_.dqn.huber_delta},
                {"double_dqn", opt_.dqn.double_dqn},
                {"lr", opt_.dqn.opt.lr},
                {"weight_decay", opt_.dqn.opt.weight_decay}};
    j["reward_model"] = {{"beta", opt_.reward.beta},
                         {"members", opt_.reward.members},
                         {"epochs", opt_.reward.epochs},
                         {"batch_size", opt_.reward.batch_size},
                         {"lr", opt_.reward.opt.lr},
                         {"weight_decay", opt_.reward.opt.weight_decay}};
    j["git"] = git_;
    j["started_at"] = started_at_;
    j["status"] = status;
    if (status != "running") j["finished_at"] = now_iso();
    j["env_steps"] = env_step_;
    j["requests_total"] = log_.records().size();
    j["requests_replayed"] = replayed_total_;
    j["response_chars"] = response_chars_;
    json sessions = json::array();
    for (const auto& s : sessions_) {
      sessions.push_back({{"session", s.session},
                          {"step", s.step},
                          {"requested", s.stats.total},
                          {"stored", s.stats.stored},
                          {"ties", s.stats.ties},
                          {"errors", s.stats.errors},
                          {"tie_fraction", s.stats.tie_fraction()},
                          {"replayed", s.replayed},
                          {"reward_loss_first", s.reward_loss_first},
                          {"reward_loss_last", s.reward_loss_last},
                          {"relabel_mean", s.relabel_mean},
                          {"relabel_stdev", s.relabel_stdev}});
    }
    j["sessions"] = std::move(sessions);
    if (!evals_.empty()) j["final_eval"] = metrics_json(evals_.back().metrics);

    const std::string tmp = manifest_path_ + ".tmp";
    {
      std::ofstream os(tmp);
      if (!os) throw config_error("run: cannot write " + tmp);
      os << j.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, manifest_path_);
  }

  // ---- checkpointing ----

  void save_checkpoint() {
    if (dir_.empty()) return;
    prefs_.save_jsonl_file(prefs_path_);

    const std::string tmp = state_path_ + ".tmp";
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw config_error("run: cannot write " + tmp);
    os.write(kStateMagic, sizeof(kStateMagic));
    put_i64(os, env_step_);
    put_i64(os, episode_index_);
    put_i64(os, step_in_episode_);
    put_i64(os, sessions_completed_);
    put_i64(os, evals_done_);
    put_i64(os, eval_counter_);
    namespace fs = std::filesystem;
    put_u64(os, fs::exists(metrics_path_) ? fs::file_size(metrics_path_) : 0);
    put_i64(os, ensemble_ready_ ? 1 : 0);
    put_f64(os, dqn_loss_sum_);
    put_i64(os, dqn_loss_n_);
    put_f64(os, last_reward_loss_);
    put_u64(os, response_chars_);
    put_u64(os, replayed_total_);
    proxy_std_.save(os);

    put_i64(os, static_cast<int64_t>(sessions_.size()));
    for (const auto& s : sessions_) {
      put_i64(os, s.session);
      put_i64(os, s.step);
      put_u64(os, s.stats.total);
      put_u64(os, s.stats.ties);
      put_u64(os, s.stats.errors);
      put_u64(os, s.stats.stored);
      put_u64(os, s.replayed);
      put_f64(os, s.reward_loss_first);
      put_f64(os, s.reward_loss_last);
      put_f64(os, s.relabel_mean);
      put_f64(os, s.relabel_stdev);
    }
    put_i64(os, static_cast<int64_t>(evals_.size()));
    for (const auto& e : evals_) {
      put_i64(os, e.step);
      put_f64(os, e.metrics.mean_throughput);
      put_f64(os, e.metrics.mean_co2_rate);
      put_f64(os, e.metrics.mean_queue);
      put_f64(os, e.metrics.ns_share);
      put_f64(os, e.metrics.ew_share);
      put_f64(os, e.epsilon);
      put_f64(os, e.dqn_loss);
      put_f64(os, e.reward_loss);
    }

    agent_->save(os);
    ensemble_->save(os);
    sim_.save_state(os);
    buffer_->save(os);
    if (!os) throw config_error("run: writing " + tmp + " failed");
    os.close();
    std::filesystem::rename(tmp, state_path_);
    write_manifest("running");
  }

  void load_checkpoint() {
    std::ifstream is(state_path_, std::ios::binary);
    if (!is) throw config_error("run: cannot open " + state_path_);
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kStateMagic, 8) != 0)
      throw config_error("run: " + state_path_ + " is not a training checkpoint");
    env_step_ = get_i64(is);
    episode_index_ = get_i64(is);
    step_in_episode_ = get_i64(is);
    sessions_completed_ = static_cast<int>(get_i64(is));
    evals_done_ = get_i64(is);
    eval_counter_ = get_i64(is);
    const uint64_t metrics_bytes = get_u64(is);
    ensemble_ready_ = get_i64(is) != 0;
    dqn_loss_sum_ = get_f64(is);
    dqn_loss_n_ = get_i64(is);
    last_reward_loss_ = get_f64(is);
    response_chars_ = get_u64(is);
    replayed_total_ = get_u64(is);
    proxy_std_.load(is);

    sessions_.resize(static_cast<size_t>(get_i64(is)));
    for (auto& s : sessions_) {
      s.session = static_cast<int>(get_i64(is));
      s.step = get_i64(is);
      s.stats.total = get_u64(is);
      s.stats.ties = get_u64(is);
      s.stats.errors = get_u64(is);
      s.stats.stored = get_u64(is);
      s.replayed = get_u64(is);
      s.reward_loss_first = get_f64(is);
      s.reward_loss_last = get_f64(is);
      s.relabel_mean = get_f64(is);
      s.relabel_stdev = get_f64(is);
    }
    evals_.resize(static_cast<size_t>(get_i64(is)));
    for (auto& e : evals_) {
      e.step = get_i64(is);
      e.metrics.mean_throughput = get_f64(is);
      e.metrics.mean_co2_rate = get_f64(is);
      e.metrics.mean_queue = get_f64(is);
      e.metrics.ns_share = get_f64(is);
      e.metrics.ew_share = get_f64(is);
      e.epsilon = get_f64(is);
      e.dqn_loss = get_f64(is);
      e.reward_loss = get_f64(is);
    }

    agent_->load(is);
    ensemble_->load(is);
    sim_.load_state(is);
    buffer_->load(is);
    if (!is) throw config_error("run: " + state_path_ + " is truncated");

    obs_ = sim_.observe();
    fresh_ = false;

    // Drop metric rows written after this checkpoint; they will be
    // regenerated identically as the run replays forward.
    namespace fs = std::filesystem;
    if (fs::exists(metrics_path_) && fs::file_size(metrics_path_) > metrics_bytes)
      fs::resize_file(metrics_path_, metrics_bytes);
  }

  // ---- state ----

  ScenarioSpec scenario_;
  RunOptions opt_;
  Mode mode_;
  BaselineSpec baseline_;
  annotate::Annotator* annotator_;

  sim::Intersection sim_;
  std::unique_ptr<agent::ReplayBuffer> buffer_;
  std::unique_ptr<agent::DqnAgent> agent_;
  std::unique_ptr<pref::RewardEnsemble> ensemble_;
  pref::PreferenceBuffer prefs_;
  annotate::AnnotationLog log_;
  OnlineStandardizer proxy_std_, lin_thr_, lin_co2_;
  core::Rng policy_rng_;

  std::vector<long long> session_steps_;
  std::vector<long long> eval_points_;
  long long env_step_ = 0;
  long long episode_index_ = 0;
  long long step_in_episode_ = 0;
  int sessions_completed_ = 0;
  long long evals_done_ = 0;
  long long eval_counter_ = 0;
  bool ensemble_ready_ = false;
  bool fresh_ = true;
  bool halted_ = false;
  double dqn_loss_sum_ = 0.0;
  long long dqn_loss_n_ = 0;
  double last_reward_loss_ = 0.0;
  uint64_t response_chars_ = 0;
  uint64_t replayed_total_ = 0;
  sim::Observation obs_{};

  std::vector<SessionSummary> sessions_;
  std::vector<EvalPoint> evals_;

  std::string dir_, manifest_path_, metrics_path_, prefs_path_, log_path_, state_path_;
  std::string started_at_, git_;
};

}  // namespace

RunResult run_rlaif(const ScenarioSpec& scenario, annotate::Annotator& annotator,
                    const RunOptions& options) {
  scenario.validate();
  options.validate();
  Engine engine(scenario, options, Mode::Rlaif, BaselineSpec{}, &annotator);
  return engine.run();
}

RunResult run_baseline(const ScenarioSpec& scenario, const BaselineSpec& baseline,
                       const RunOptions& options) {
  scenario.validate();
  options.validate();
  baseline.validate();
  Engine engine(scenario, options, mode_of(baseline), baseline, nullptr);
  return engine.run();
}

double select_grid_alpha(const std::vector<GridRow>& rows) {
  if (rows.empty()) throw contract_error("grid: no rows");
  auto sorted = rows;
  std::sort(sorted.begin(), sorted.end(),
            [](const GridRow& a, const GridRow& b) { return a.alpha < b.alpha; });
  double min_co2 = sorted.front().metrics.mean_co2_rate;
  for (const auto& r : sorted) min_co2 = std::min(min_co2, r.metrics.mean_co2_rate);
  const double budget = 1.1 * min_co2;
  double best_alpha = -1.0;
  double best_thr = -1.0;
  for (const auto& r : sorted) {  // ascending alpha: >= hands ties to larger alpha
    if (r.metrics.mean_co2_rate > budget) continue;
    if (r.metrics.mean_throughput >= best_thr) {
      best_thr = r.metrics.mean_throughput;
      best_alpha = r.alpha;
    }
  }
  if (best_alpha < 0.0) throw contract_error("grid: no row satisfies the CO2 budget");
  return best_alpha;
}

GridResult grid_search_linear(const ScenarioSpec& scenario, const RunOptions& options) {
  GridResult out;
  for (int k = 1; k <= 9; ++k) {
    BaselineSpec bl;
    bl.kind = BaselineKind::Linear;
    bl.alpha = static_cast<double>(k) / 10.0;
    RunOptions o = options;
    if (!options.out_dir.empty()) o.out_dir = options.out_dir + "/" + bl.label();
    const auto r = run_baseline(scenario, bl, o);
    out.rows.push_back({bl.alpha, r.final_eval});
  }
  out.best_alpha = select_grid_alpha(out.rows);

  if (!options.out_dir.empty()) {
    std::ofstream os(options.out_dir + "/grid.csv");
    os << "alpha,throughput,co2_rate,ns_share,ew_share,queue\n";
    for (const auto& r : out.rows) {
      char row[192];
      std::snprintf(row, sizeof(row), "%.1f,%.12g,%.12g,%.12g,%.12g,%.12g\n", r.alpha,
                    r.metrics.mean_throughput, r.metrics.mean_co2_rate, r.metrics.ns_share,
                    r.metrics.ew_share, r.metrics.mean_queue);
      os << row;
    }
  }
  return out;
}

std::vector<PriorityRow> run_priority_suite(const std::string& scenario_path,
                                            uint64_t master_seed,
                                            const AnnotatorFactory& make_annotator,
                                            const RunOptions& options) {
  const auto variants = scenario_variants(scenario_path);
  if (variants.empty())
    throw config_error("priority suite: scenario file has no variants table");
  std::vector<PriorityRow> rows;
  for (const auto& name : variants) {
    auto spec = load_scenario_file(scenario_path, name);
    spec.master_seed = master_seed;
    RunOptions o = options;
    if (o.fast) apply_fast_profile(spec, o);
    if (!options.out_dir.empty()) o.out_dir = options.out_dir + "/" + name;
    auto annotator = make_annotator(spec);
    const auto r = run_rlaif(spec, *annotator, o);
    rows.push_back({name, spec.user_specification, r.final_eval});
  }
  if (!options.out_dir.empty()) {
    std::ofstream os(options.out_dir + "/priority.csv");
    os << "variant,ns_share,ew_share,throughput,co2_rate,queue\n";
    for (const auto& r : rows) {
      char row[256];
      std::snprintf(row, sizeof(row), "%s,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                    r.variant.c_str(), r.metrics.ns_share, r.metrics.ew_share,
                    r.metrics.mean_throughput, r.metrics.mean_co2_rate,
                    r.metrics.mean_queue);
      os << row;
    }
  }
  return rows;
}

}  // namespace motsc::orchestrator
