#include "motsc/agent/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "motsc/core/error.hpp"
#include "motsc/nn/checkpoint.hpp"

namespace motsc::agent {

void DqnConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw config_error("dqn: gamma must be in [0, 1)");
  if (batch_size < 1) throw config_error("dqn: batch_size must be >= 1");
  if (target_sync_every < 1) throw config_error("dqn: target_sync_every must be >= 1");
  if (!(eps_start >= 0.0 && eps_start <= 1.0 && eps_end >= 0.0 && eps_end <= 1.0))
    throw config_error("dqn: epsilon bounds must be in [0, 1]");
  if (eps_decay_steps < 1) throw config_error("dqn: eps_decay_steps must be >= 1");
  if (!(huber_delta > 0.0)) throw config_error("dqn: huber_delta must be positive");
}

double huber_loss(double err, double delta) {
  const double a = std::fabs(err);
  if (a <= delta) return 0.5 * err * err;
  return delta * (a - 0.5 * delta);
}

double huber_grad(double err, double delta) { return std::clamp(err, -delta, delta); }

DqnAgent::DqnAgent(int obs_dim, int num_actions, uint64_t seed, DqnConfig cfg)
    : obs_dim_(obs_dim),
      num_actions_(num_actions),
      cfg_(cfg),
      rng_(core::derive_seed(seed, "dqn_agent", 0)) {
  if (obs_dim < 1 || num_actions < 2)
    throw config_error("dqn: bad observation/action dimensions");
  cfg_.validate();
  online_ = nn::DenseNet(obs_dim, num_actions);
  online_.init_he_uniform(core::derive_seed(seed, "dqn_qnet", 0));
  opt_ = nn::AdamW(online_, cfg_.opt);
  target_ = online_;
}

double DqnAgent::epsilon_at(long long step) const {
  const double frac =
      std::min(1.0, static_cast<double>(std::max(0LL, step)) /
                        static_cast<double>(cfg_.eps_decay_steps));
  return cfg_.eps_start + (cfg_.eps_end - cfg_.eps_start) * frac;
}

int DqnAgent::greedy_from_row(const double* q) const {
  int best = 0;
  for (int a = 1; a < num_actions_; ++a) {
    if (q[a] > q[best]) best = a;  // strict: ties keep the lowest index
  }
  return best;
}

int DqnAgent::select_action(std::span<const double> obs) {
  const double eps = epsilon();
  ++env_steps_;
  if (rng_.uniform01() < eps)
    return static_cast<int>(rng_.uniform_below(static_cast<uint64_t>(num_actions_)));
  return greedy_action(obs);
}

int DqnAgent::greedy_action(std::span<const double> obs) const {
  const auto q = online_.forward1(obs);
  return greedy_from_row(q.data());
}

std::vector<double> DqnAgent::q_values(std::span<const double> obs) const {
  return online_.forward1(obs);
}

double DqnAgent::td_gradients(const ReplayBuffer& buf, std::span<const size_t> indices,
                              nn::Gradients& grads) const {
  if (indices.empty()) throw contract_error("dqn: empty batch");
  const int b = static_cast<int>(indices.size());

  core::Matrix obs(b, obs_dim_), next(b, obs_dim_);
  for (int i = 0; i < b; ++i) {
    obs.set_row(i, buf.obs_at(indices[static_cast<size_t>(i)]));
    next.set_row(i, buf.next_obs_at(indices[static_cast<size_t>(i)]));
  }

  nn::BatchTrace trace;
  core::Matrix q, q_next_target;
  online_.forward(obs, q, &trace);
  target_.forward(next, q_next_target);

  core::Matrix q_next_online;
  if (cfg_.double_dqn) online_.forward(next, q_next_online);

  core::Matrix dy(b, num_actions_);
  double loss = 0.0;
  for (int i = 0; i < b; ++i) {
    const size_t idx = indices[static_cast<size_t>(i)];
    const int a = buf.action_at(idx);
    if (a < 0 || a >= num_actions_) throw contract_error("dqn: stored action out of range");
    const double not_done = buf.done_at(idx) ? 0.0 : 1.0;
    double bootstrap;
    if (cfg_.double_dqn) {
      const int a_star = greedy_from_row(q_next_online.row(i));
      bootstrap = q_next_target.at(i, a_star);
    } else {
      bootstrap = q_next_target.at(i, greedy_from_row(q_next_target.row(i)));
    }
    const double y = buf.reward_at(idx) + cfg_.gamma * not_done * bootstrap;
    const double err = q.at(i, a) - y;
    loss += huber_loss(err, cfg_.huber_delta);
    dy.at(i, a) = huber_grad(err, cfg_.huber_delta) / static_cast<double>(b);
  }
  online_.backward(trace, dy, grads);
  return loss / static_cast<double>(b);
}

double DqnAgent::td_loss(const ReplayBuffer& buf, std::span<const size_t> indices) const {
  auto grads = online_.make_gradients();
  return td_gradients(buf, indices, grads);
}

double DqnAgent::update_on(const ReplayBuffer& buf, std::span<const size_t> indices) {
  auto grads = online_.make_gradients();
  const double loss = td_gradients(buf, indices, grads);
  opt_.step(online_, grads);
  ++update_count_;
  if (update_count_ % cfg_.target_sync_every == 0) sync_target();
  return loss;
}

double DqnAgent::dqn_update(const ReplayBuffer& buf) {
  if (buf.size() == 0) throw contract_error("dqn: cannot update from an empty buffer");
  std::vector<size_t> indices(static_cast<size_t>(cfg_.batch_size));
  for (auto& i : indices) i = rng_.uniform_below(buf.size());
  return update_on(buf, indices);
}

void DqnAgent::sync_target() { target_ = online_; }

namespace {
constexpr char kMagic[8] = {'M', 'O', 'T', 'S', 'C', 'D', 'Q', '1'};
}

void DqnAgent::save(std::ostream& os) const {
  os.write(kMagic, sizeof(kMagic));
  const int64_t env_steps = env_steps_, updates = update_count_;
  os.write(reinterpret_cast<const char*>(&env_steps), 8);
  os.write(reinterpret_cast<const char*>(&updates), 8);
  std::ostringstream rng_state;
  rng_.save(rng_state);
  const std::string rs = rng_state.str();
  const uint64_t rn = rs.size();
  os.write(reinterpret_cast<const char*>(&rn), 8);
  os.write(rs.data(), static_cast<std::streamsize>(rn));
  nn::save_checkpoint(os, online_, &opt_);
  nn::save_checkpoint(os, target_);
  if (!os) throw config_error("dqn: write failed");
}

void DqnAgent::load(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw config_error("dqn: bad magic");
  int64_t env_steps = 0, updates = 0;
  is.read(reinterpret_cast<char*>(&env_steps), 8);
  is.read(reinterpret_cast<char*>(&updates), 8);
  uint64_t rn = 0;
  if (!is.read(reinterpret_cast<char*>(&rn), 8))
    throw config_error("dqn: truncated file");
  std::string rs(rn, '\0');
  if (!is.read(rs.data(), static_cast<std::streamsize>(rn)))
    throw config_error("dqn: truncated file");
  std::istringstream rng_state(rs);
  rng_.load(rng_state);
  nn::load_checkpoint(is, online_, &opt_);
  nn::load_checkpoint(is, target_);
  if (online_.input_dim() != obs_dim_ || online_.output_dim() != num_actions_ ||
      target_.input_dim() != obs_dim_ || target_.output_dim() != num_actions_)
    throw config_error("dqn: checkpoint architecture mismatch");
  env_steps_ = env_steps;
  update_count_ = updates;
}

void DqnAgent::save_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw config_error("dqn: cannot open " + path + " for writing");
  save(os);
}

void DqnAgent::load_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw config_error("dqn: cannot open " + path);
  load(is);
}

}  // namespace motsc::agent
