#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "motsc/agent/replay_buffer.hpp"
#include "motsc/nn/adamw.hpp"
#include "motsc/nn/checkpoint.hpp"
#include "motsc/nn/dense_net.hpp"
#include "motsc/pref/preference.hpp"

namespace motsc::pref {

struct RewardModelConfig {
  double beta = 1.0;  // Bradley–Terry temperature
  int members = 3;
  int epochs = 50;
  int batch_size = 128;
  nn::AdamWConfig opt;

  void validate() const;
};

// Statistics of the most recent buffer-wide relabel; frozen for standardizing
// transitions that arrive before the next feedback session.
struct RelabelStats {
  double mean = 0.0;
  double stdev = 0.0;
  uint32_t version = 0;
  size_t count = 0;
};

// Ensemble of small reward networks r_m(obs ⊕ one-hot(action)) trained with
// the Bradley–Terry preference likelihood P(σ¹ ≻ σ²) = σ((R¹ - R²)/β) where
// R = Σ_t r(s_t, a_t). Member disagreement drives query selection; the member
// mean is the relabeling reward.
class RewardEnsemble {
 public:
  static constexpr double kRewardClamp = 10.0;
  static constexpr double kStdFloor = 1e-8;

  RewardEnsemble(int obs_dim, int num_actions, uint64_t seed, RewardModelConfig cfg = {});

  int input_dim() const { return obs_dim_ + num_actions_; }
  int obs_dim() const { return obs_dim_; }
  int num_actions() const { return num_actions_; }
  int members() const { return cfg_.members; }
  const RewardModelConfig& config() const { return cfg_; }
  uint32_t relabel_version() const { return relabel_version_; }
  const RelabelStats& last_stats() const { return last_stats_; }

  nn::DenseNet& member_net(int m) { return nets_[static_cast<size_t>(m)]; }
  const nn::DenseNet& member_net(int m) const { return nets_[static_cast<size_t>(m)]; }

  void fill_input(std::span<const double> obs, int action, double* row) const;
  std::vector<double> make_input(std::span<const double> obs, int action) const;

  double member_output(int m, std::span<const double> input) const;
  double segment_return(int m, const SegmentData& seg) const;
  // P(a ≻ b) under member m (numerically stable logistic).
  double preference_prob(int m, const SegmentData& a, const SegmentData& b) const;
  // Cross-entropy of one labelled pair under member m (label must be 1 or 2).
  double pair_loss(int m, const PreferencePair& pair) const;

  // Mean over members; the raw (pre-standardization) relabeling reward.
  double raw_reward(std::span<const double> obs, int action) const;

  // Minibatch cross-entropy training over the whole dataset, cfg.epochs
  // passes, each member shuffling independently. Returns per-epoch loss
  // averaged over members and pairs. Labels must be 1 or 2.
  std::vector<double> train(const PreferenceBuffer& prefs, uint64_t shuffle_seed);

  // Recomputes the raw reward of every stored transition, restandardizes
  // buffer-wide (population std; std under kStdFloor maps all to 0; result
  // clamped to ±kRewardClamp) and stamps a new reward version.
  RelabelStats relabel_buffer(agent::ReplayBuffer& buf);

  // Labels transitions [from, size) using the frozen stats of the last full
  // relabel. Single-row forwards match the batched relabel bit for bit.
  void relabel_tail(agent::ReplayBuffer& buf, size_t from) const;

  static double standardize(double raw, const RelabelStats& stats);

  void save(std::ostream& os) const;
  void load(std::istream& is);
  void save_file(const std::string& path) const;
  void load_file(const std::string& path);

 private:
  // Sum of per-row member outputs for a stacked segment matrix.
  void batched_outputs(int m, const core::Matrix& x, std::vector<double>& y) const;

  int obs_dim_;
  int num_actions_;
  RewardModelConfig cfg_;
  std::vector<nn::DenseNet> nets_;
  std::vector<nn::AdamW> opts_;
  uint32_t relabel_version_ = 0;
  RelabelStats last_stats_;
};

double stable_logistic(double x);
double softplus(double x);  // ln(1 + e^x) without overflow

}  // namespace motsc::pref
