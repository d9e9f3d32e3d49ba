#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "motsc/core/error.hpp"
#include "motsc/sim/types.hpp"

namespace motsc::agent {

// Ordered transition store. Insertion order is the identity of a transition:
// segment extraction and the annotation pipeline address transitions by
// index, so the buffer never evicts or reorders; exceeding capacity throws.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int obs_dim, size_t capacity = 200000);

  size_t size() const { return actions_.size(); }
  size_t capacity() const { return capacity_; }
  int obs_dim() const { return obs_dim_; }

  void push(std::span<const double> obs, int action, std::span<const double> next_obs,
            bool done, const sim::StepMetrics& metrics);

  std::span<const double> obs_at(size_t i) const {
    return {obs_.data() + i * obs_dim_, static_cast<size_t>(obs_dim_)};
  }
  std::span<const double> next_obs_at(size_t i) const {
    return {next_obs_.data() + i * obs_dim_, static_cast<size_t>(obs_dim_)};
  }
  int action_at(size_t i) const { return actions_[i]; }
  bool done_at(size_t i) const { return done_[i] != 0; }
  const sim::StepMetrics& metrics_at(size_t i) const { return metrics_[i]; }
  double raw_reward_at(size_t i) const { return raw_reward_[i]; }
  double reward_at(size_t i) const { return reward_[i]; }
  uint32_t reward_version_at(size_t i) const { return reward_version_[i]; }

  void set_reward(size_t i, double raw, double standardized, uint32_t version) {
    raw_reward_[i] = raw;
    reward_[i] = standardized;
    reward_version_[i] = version;
  }

  void save(std::ostream& os) const;
  void load(std::istream& is);
  bool operator==(const ReplayBuffer& other) const;

 private:
  int obs_dim_;
  size_t capacity_;
  std::vector<double> obs_, next_obs_;
  std::vector<int> actions_;
  std::vector<uint8_t> done_;
  std::vector<double> raw_reward_, reward_;
  std::vector<uint32_t> reward_version_;
  std::vector<sim::StepMetrics> metrics_;
};

}  // namespace motsc::agent
