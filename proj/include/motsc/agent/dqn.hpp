#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>

#include "motsc/agent/replay_buffer.hpp"
#include "motsc/core/rng.hpp"
#include "motsc/nn/adamw.hpp"
#include "motsc/nn/dense_net.hpp"

namespace motsc::agent {

struct DqnConfig {
  double gamma = 0.99;
  int batch_size = 128;
  long long target_sync_every = 1000;  // gradient updates between hard syncs
  double eps_start = 1.0;
  double eps_end = 0.05;
  long long eps_decay_steps = 20000;  // linear anneal over this many env steps
  double huber_delta = 1.0;
  bool double_dqn = false;  // action selection via online net for the target
  nn::AdamWConfig opt;

  void validate() const;
};

// Huber loss on the TD error; C1 everywhere, quadratic within ±delta.
double huber_loss(double err, double delta);
double huber_grad(double err, double delta);

class DqnAgent {
 public:
  DqnAgent(int obs_dim, int num_actions, uint64_t seed, DqnConfig cfg = {});

  int obs_dim() const { return obs_dim_; }
  int num_actions() const { return num_actions_; }
  const DqnConfig& config() const { return cfg_; }
  long long env_steps() const { return env_steps_; }
  long long update_count() const { return update_count_; }

  double epsilon_at(long long step) const;
  double epsilon() const { return epsilon_at(env_steps_); }

  // ε-greedy draw at the current schedule position; advances the step count.
  int select_action(std::span<const double> obs);
  // Greedy argmax; ties resolve to the lowest action index.
  int greedy_action(std::span<const double> obs) const;
  std::vector<double> q_values(std::span<const double> obs) const;

  // TD loss of a fixed batch under the current parameters (target net held
  // constant). Mean Huber over the batch.
  double td_loss(const ReplayBuffer& buf, std::span<const size_t> indices) const;
  // Same forward pass, also accumulating dLoss/dθ of the online net.
  double td_gradients(const ReplayBuffer& buf, std::span<const size_t> indices,
                      nn::Gradients& grads) const;
  // Gradient step on a fixed batch; counts the update and syncs the target
  // every cfg.target_sync_every updates.
  double update_on(const ReplayBuffer& buf, std::span<const size_t> indices);
  // One training update on a uniformly sampled batch (with replacement).
  double dqn_update(const ReplayBuffer& buf);

  void sync_target();

  const nn::DenseNet& online_net() const { return online_; }
  nn::DenseNet& mutable_online_net() { return online_; }
  const nn::DenseNet& target_net() const { return target_; }

  void save(std::ostream& os) const;
  void load(std::istream& is);
  void save_file(const std::string& path) const;
  void load_file(const std::string& path);

 private:
  int greedy_from_row(const double* q) const;

  int obs_dim_;
  int num_actions_;
  DqnConfig cfg_;
  nn::DenseNet online_;
  nn::DenseNet target_;
  nn::AdamW opt_;
  core::Rng rng_;
  long long env_steps_ = 0;
  long long update_count_ = 0;
};

}  // namespace motsc::agent
