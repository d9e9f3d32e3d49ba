#include "motsc/agent/replay_buffer.hpp"

#include <cstring>
#include <istream>
#include <ostream>

namespace motsc::agent {

namespace {

template <typename T>
void put_vec(std::ostream& os, const std::vector<T>& v) {
  const uint64_t n = v.size();
  os.write(reinterpret_cast<const char*>(&n), 8);
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(n * sizeof(T)));
}

template <typename T>
void get_vec(std::istream& is, std::vector<T>& v) {
  uint64_t n = 0;
  if (!is.read(reinterpret_cast<char*>(&n), 8))
    throw motsc::config_error("replay buffer: truncated file");
  v.resize(n);
  if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T))))
    throw motsc::config_error("replay buffer: truncated file");
}

constexpr char kMagic[8] = {'M', 'O', 'T', 'S', 'C', 'R', 'B', '1'};

}  // namespace

ReplayBuffer::ReplayBuffer(int obs_dim, size_t capacity)
    : obs_dim_(obs_dim), capacity_(capacity) {
  if (obs_dim <= 0 || capacity == 0)
    throw contract_error("replay buffer: obs_dim and capacity must be positive");
}

void ReplayBuffer::push(std::span<const double> obs, int action,
                        std::span<const double> next_obs, bool done,
                        const sim::StepMetrics& metrics) {
  if (size() >= capacity_) throw contract_error("replay buffer: capacity exceeded");
  if (static_cast<int>(obs.size()) != obs_dim_ ||
      static_cast<int>(next_obs.size()) != obs_dim_)
    throw contract_error("replay buffer: observation width mismatch");
  if (action < 0) throw contract_error("replay buffer: negative action");
  obs_.insert(obs_.end(), obs.begin(), obs.end());
  next_obs_.insert(next_obs_.end(), next_obs.begin(), next_obs.end());
  actions_.push_back(action);
  done_.push_back(done ? 1 : 0);
  raw_reward_.push_back(0.0);
  reward_.push_back(0.0);
  reward_version_.push_back(0);
  metrics_.push_back(metrics);
}

void ReplayBuffer::save(std::ostream& os) const {
  os.write(kMagic, sizeof(kMagic));
  const uint64_t dim = static_cast<uint64_t>(obs_dim_), cap = capacity_;
  os.write(reinterpret_cast<const char*>(&dim), 8);
  os.write(reinterpret_cast<const char*>(&cap), 8);
  put_vec(os, obs_);
  put_vec(os, next_obs_);
  put_vec(os, actions_);
  put_vec(os, done_);
  put_vec(os, raw_reward_);
  put_vec(os, reward_);
  put_vec(os, reward_version_);
  put_vec(os, metrics_);
  if (!os) throw config_error("replay buffer: write failed");
}

void ReplayBuffer::load(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw config_error("replay buffer: bad magic");
  uint64_t dim = 0, cap = 0;
  is.read(reinterpret_cast<char*>(&dim), 8);
  is.read(reinterpret_cast<char*>(&cap), 8);
  if (!is) throw config_error("replay buffer: truncated file");
  obs_dim_ = static_cast<int>(dim);
  capacity_ = cap;
  get_vec(is, obs_);
  get_vec(is, next_obs_);
  get_vec(is, actions_);
  get_vec(is, done_);
  get_vec(is, raw_reward_);
  get_vec(is, reward_);
  get_vec(is, reward_version_);
  get_vec(is, metrics_);
  if (obs_.size() != actions_.size() * static_cast<size_t>(obs_dim_) ||
      metrics_.size() != actions_.size())
    throw config_error("replay buffer: inconsistent file");
}

bool ReplayBuffer::operator==(const ReplayBuffer& other) const {
  auto metrics_eq = [](const sim::StepMetrics& a, const sim::StepMetrics& b) {
    return a.throughput == b.throughput && a.co2_g == b.co2_g && a.co2_rate == b.co2_rate &&
           a.ns_throughput == b.ns_throughput && a.ew_throughput == b.ew_throughput &&
           a.total_queue == b.total_queue && a.sim_time == b.sim_time;
  };
  if (obs_dim_ != other.obs_dim_ || obs_ != other.obs_ || next_obs_ != other.next_obs_ ||
      actions_ != other.actions_ || done_ != other.done_ ||
      raw_reward_ != other.raw_reward_ || reward_ != other.reward_ ||
      reward_version_ != other.reward_version_ || metrics_.size() != other.metrics_.size())
    return false;
  for (size_t i = 0; i < metrics_.size(); ++i) {
    if (!metrics_eq(metrics_[i], other.metrics_[i])) return false;
  }
  return true;
}

}  // namespace motsc::agent
