#include "motsc/pref/reward_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "motsc/core/error.hpp"

namespace motsc::pref {

double stable_logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

void RewardModelConfig::validate() const {
  if (!(beta > 0.0)) throw config_error("reward model: beta must be positive");
  if (members < 1) throw config_error("reward model: need at least one member");
  if (epochs < 1) throw config_error("reward model: epochs must be >= 1");
  if (batch_size < 1) throw config_error("reward model: batch_size must be >= 1");
}

RewardEnsemble::RewardEnsemble(int obs_dim, int num_actions, uint64_t seed,
                               RewardModelConfig cfg)
    : obs_dim_(obs_dim), num_actions_(num_actions), cfg_(cfg) {
  if (obs_dim < 1 || num_actions < 2)
    throw config_error("reward model: bad observation/action dimensions");
  cfg_.validate();
  for (int m = 0; m < cfg_.members; ++m) {
    nets_.emplace_back(input_dim(), 1);
    nets_.back().init_he_uniform(core::derive_seed(seed, "reward_member", m));
    opts_.emplace_back(nets_.back(), cfg_.opt);
  }
}

void RewardEnsemble::fill_input(std::span<const double> obs, int action, double* row) const {
  if (static_cast<int>(obs.size()) != obs_dim_)
    throw contract_error("reward model: observation width mismatch");
  if (action < 0 || action >= num_actions_)
    throw contract_error("reward model: action out of range");
  std::copy(obs.begin(), obs.end(), row);
  std::fill(row + obs_dim_, row + input_dim(), 0.0);
  row[obs_dim_ + action] = 1.0;
}

std::vector<double> RewardEnsemble::make_input(std::span<const double> obs, int action) const {
  std::vector<double> row(static_cast<size_t>(input_dim()));
  fill_input(obs, action, row.data());
  return row;
}

double RewardEnsemble::member_output(int m, std::span<const double> input) const {
  return nets_[static_cast<size_t>(m)].forward1(input)[0];
}

double RewardEnsemble::segment_return(int m, const SegmentData& seg) const {
  double sum = 0.0;
  for (int t = 0; t < seg.length(); ++t)
    sum += member_output(m, make_input(seg.obs[static_cast<size_t>(t)],
                                       seg.actions[static_cast<size_t>(t)]));
  return sum;
}

double RewardEnsemble::preference_prob(int m, const SegmentData& a, const SegmentData& b) const {
  return stable_logistic((segment_return(m, a) - segment_return(m, b)) / cfg_.beta);
}

double RewardEnsemble::pair_loss(int m, const PreferencePair& pair) const {
  if (pair.label != 1 && pair.label != 2)
    throw contract_error("reward model: loss needs a decided label");
  const double d = (segment_return(m, pair.first) - segment_return(m, pair.second)) / cfg_.beta;
  return pair.label == 1 ? softplus(-d) : softplus(d);
}

double RewardEnsemble::raw_reward(std::span<const double> obs, int action) const {
  const auto input = make_input(obs, action);
  double sum = 0.0;
  for (int m = 0; m < cfg_.members; ++m) sum += member_output(m, input);
  return sum / static_cast<double>(cfg_.members);
}

void RewardEnsemble::batched_outputs(int m, const core::Matrix& x, std::vector<double>& y) const {
  core::Matrix out;
  nets_[static_cast<size_t>(m)].forward(x, out);
  y.resize(static_cast<size_t>(out.rows));
  for (int r = 0; r < out.rows; ++r) y[static_cast<size_t>(r)] = out.at(r, 0);
}

std::vector<double> RewardEnsemble::train(const PreferenceBuffer& prefs, uint64_t shuffle_seed) {
  const size_t n = prefs.size();
  if (n == 0) return {};
  for (size_t i = 0; i < n; ++i) {
    if (prefs[i].label != 1 && prefs[i].label != 2)
      throw contract_error("reward model: training data contains undecided labels");
  }

  std::vector<core::Rng> rngs;
  for (int m = 0; m < cfg_.members; ++m)
    rngs.emplace_back(core::derive_seed(shuffle_seed, "reward_shuffle", m));

  std::vector<double> epoch_losses(static_cast<size_t>(cfg_.epochs), 0.0);
  std::vector<size_t> perm(n);
  core::Matrix x, dy;
  nn::BatchTrace trace;

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (int m = 0; m < cfg_.members; ++m) {
      auto& net = nets_[static_cast<size_t>(m)];
      auto grads = net.make_gradients();
      std::iota(perm.begin(), perm.end(), size_t{0});
      rngs[static_cast<size_t>(m)].shuffle(perm.begin(), perm.end());

      for (size_t batch_start = 0; batch_start < n;
           batch_start += static_cast<size_t>(cfg_.batch_size)) {
        const size_t batch_n =
            std::min(static_cast<size_t>(cfg_.batch_size), n - batch_start);

        // Stack all segment steps: pair i occupies first-rows then second-rows.
        int rows = 0;
        for (size_t b = 0; b < batch_n; ++b) {
          const auto& p = prefs[perm[batch_start + b]];
          rows += p.first.length() + p.second.length();
        }
        x.resize(rows, input_dim());
        int r = 0;
        for (size_t b = 0; b < batch_n; ++b) {
          const auto& p = prefs[perm[batch_start + b]];
          for (int t = 0; t < p.first.length(); ++t)
            fill_input(p.first.obs[static_cast<size_t>(t)],
                       p.first.actions[static_cast<size_t>(t)], x.row(r++));
          for (int t = 0; t < p.second.length(); ++t)
            fill_input(p.second.obs[static_cast<size_t>(t)],
                       p.second.actions[static_cast<size_t>(t)], x.row(r++));
        }

        core::Matrix out;
        net.forward(x, out, &trace);

        dy.resize(rows, 1);
        r = 0;
        for (size_t b = 0; b < batch_n; ++b) {
          const auto& p = prefs[perm[batch_start + b]];
          const int h1 = p.first.length(), h2 = p.second.length();
          double r1 = 0.0, r2 = 0.0;
          for (int t = 0; t < h1; ++t) r1 += out.at(r + t, 0);
          for (int t = 0; t < h2; ++t) r2 += out.at(r + h1 + t, 0);
          const double d = (r1 - r2) / cfg_.beta;
          const double target = p.label == 1 ? 1.0 : 0.0;
          loss_sum += p.label == 1 ? softplus(-d) : softplus(d);
          const double g = (stable_logistic(d) - target) /
                           (cfg_.beta * static_cast<double>(batch_n));
          for (int t = 0; t < h1; ++t) dy.at(r + t, 0) = g;
          for (int t = 0; t < h2; ++t) dy.at(r + h1 + t, 0) = -g;
          r += h1 + h2;
        }

        grads.zero();
        net.backward(trace, dy, grads);
        opts_[static_cast<size_t>(m)].step(net, grads);
      }
    }
    epoch_losses[static_cast<size_t>(epoch)] =
        loss_sum / (static_cast<double>(cfg_.members) * static_cast<double>(n));
  }
  return epoch_losses;
}

double RewardEnsemble::standardize(double raw, const RelabelStats& stats) {
  if (stats.count == 0 || stats.stdev < kStdFloor) return 0.0;
  return std::clamp((raw - stats.mean) / stats.stdev, -kRewardClamp, kRewardClamp);
}

RelabelStats RewardEnsemble::relabel_buffer(agent::ReplayBuffer& buf) {
  const size_t n = buf.size();
  ++relabel_version_;
  if (n == 0) {
    last_stats_ = RelabelStats{0.0, 0.0, relabel_version_, 0};
    return last_stats_;
  }

  std::vector<double> raw(n, 0.0);
  constexpr size_t kChunk = 1024;
  core::Matrix x;
  std::vector<double> y;
  for (size_t begin = 0; begin < n; begin += kChunk) {
    const size_t rows = std::min(kChunk, n - begin);
    x.resize(static_cast<int>(rows), input_dim());
    for (size_t i = 0; i < rows; ++i)
      fill_input(buf.obs_at(begin + i), buf.action_at(begin + i), x.row(static_cast<int>(i)));
    for (int m = 0; m < cfg_.members; ++m) {
      batched_outputs(m, x, y);
      for (size_t i = 0; i < rows; ++i) raw[begin + i] += y[i];
    }
  }
  // Same division as raw_reward() so single-row recomputes match bit for bit.
  for (auto& v : raw) v /= static_cast<double>(cfg_.members);

  double mean = 0.0;
  for (double v : raw) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : raw) var += (v - mean) * (v - mean);
  const double stdev = std::sqrt(var / static_cast<double>(n));

  last_stats_ = RelabelStats{mean, stdev, relabel_version_, n};
  for (size_t i = 0; i < n; ++i)
    buf.set_reward(i, raw[i], standardize(raw[i], last_stats_), relabel_version_);
  return last_stats_;
}

void RewardEnsemble::relabel_tail(agent::ReplayBuffer& buf, size_t from) const {
  for (size_t i = from; i < buf.size(); ++i) {
    const double raw = raw_reward(buf.obs_at(i), buf.action_at(i));
    buf.set_reward(i, raw, standardize(raw, last_stats_), last_stats_.version);
  }
}

namespace {
constexpr char kMagic[8] = {'M', 'O', 'T', 'S', 'C', 'R', 'E', '1'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void get(std::istream& is, T& v) {
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw config_error("reward model: truncated file");
}
}  // namespace

void RewardEnsemble::save(std::ostream& os) const {
  os.write(kMagic, sizeof(kMagic));
  put(os, static_cast<int32_t>(obs_dim_));
  put(os, static_cast<int32_t>(num_actions_));
  put(os, cfg_.beta);
  put(os, static_cast<int32_t>(cfg_.members));
  put(os, static_cast<int32_t>(cfg_.epochs));
  put(os, static_cast<int32_t>(cfg_.batch_size));
  put(os, relabel_version_);
  put(os, last_stats_.mean);
  put(os, last_stats_.stdev);
  put(os, last_stats_.version);
  put(os, static_cast<uint64_t>(last_stats_.count));
  for (int m = 0; m < cfg_.members; ++m)
    nn::save_checkpoint(os, nets_[static_cast<size_t>(m)], &opts_[static_cast<size_t>(m)]);
  if (!os) throw config_error("reward model: write failed");
}

void RewardEnsemble::load(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw config_error("reward model: bad magic");
  int32_t obs_dim = 0, num_actions = 0, members = 0, epochs = 0, batch = 0;
  get(is, obs_dim);
  get(is, num_actions);
  double beta = 0.0;
  get(is, beta);
  get(is, members);
  get(is, epochs);
  get(is, batch);
  obs_dim_ = obs_dim;
  num_actions_ = num_actions;
  cfg_.beta = beta;
  cfg_.members = members;
  cfg_.epochs = epochs;
  cfg_.batch_size = batch;
  cfg_.validate();
  get(is, relabel_version_);
  get(is, last_stats_.mean);
  get(is, last_stats_.stdev);
  get(is, last_stats_.version);
  uint64_t count = 0;
  get(is, count);
  last_stats_.count = count;

  nets_.assign(static_cast<size_t>(members), {});
  opts_.assign(static_cast<size_t>(members), {});
  for (int m = 0; m < members; ++m) {
    nn::load_checkpoint(is, nets_[static_cast<size_t>(m)], &opts_[static_cast<size_t>(m)]);
    if (nets_[static_cast<size_t>(m)].input_dim() != input_dim() ||
        nets_[static_cast<size_t>(m)].output_dim() != 1)
      throw config_error("reward model: member architecture mismatch");
  }
  cfg_.opt = opts_.front().config();
}

void RewardEnsemble::save_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw config_error("reward model: cannot open " + path + " for writing");
  save(os);
}

void RewardEnsemble::load_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw config_error("reward model: cannot open " + path);
  load(is);
}

}  // namespace motsc::pref
