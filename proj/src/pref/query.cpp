#include "motsc/pref/query.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "motsc/core/error.hpp"

namespace motsc::pref {

std::vector<CandidatePair> sample_candidate_pairs(const std::vector<size_t>& eligible_starts,
                                                  int count, core::Rng& rng) {
  if (count < 0) throw contract_error("query: negative candidate count");
  if (eligible_starts.size() < 2)
    throw contract_error("query: need at least two eligible segment starts");
  const uint64_t n = eligible_starts.size();
  std::vector<CandidatePair> pairs;
  pairs.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    const size_t a = eligible_starts[rng.uniform_below(n)];
    size_t b = a;
    while (b == a) b = eligible_starts[rng.uniform_below(n)];
    pairs.push_back({a, b});
  }
  return pairs;
}

std::vector<double> pairwise_disagreement(const RewardEnsemble& ensemble,
                                          const agent::ReplayBuffer& buffer,
                                          const std::vector<CandidatePair>& pairs, int h) {
  if (h < 1) throw contract_error("query: segment length must be >= 1");
  const size_t hh = static_cast<size_t>(h);
  for (const auto& p : pairs) {
    if (p.start1 + hh > buffer.size() || p.start2 + hh > buffer.size())
      throw contract_error("query: candidate segment exceeds buffer");
  }

  const int members = ensemble.members();
  const double beta = ensemble.config().beta;
  std::vector<double> probs(pairs.size() * static_cast<size_t>(members));

  constexpr size_t kPairsPerChunk = 512;
  core::Matrix x;
  core::Matrix out;
  for (size_t begin = 0; begin < pairs.size(); begin += kPairsPerChunk) {
    const size_t chunk = std::min(kPairsPerChunk, pairs.size() - begin);
    x.resize(static_cast<int>(chunk * 2 * hh), ensemble.input_dim());
    int r = 0;
    for (size_t i = 0; i < chunk; ++i) {
      const auto& p = pairs[begin + i];
      for (size_t t = 0; t < hh; ++t)
        ensemble.fill_input(buffer.obs_at(p.start1 + t), buffer.action_at(p.start1 + t),
                            x.row(r++));
      for (size_t t = 0; t < hh; ++t)
        ensemble.fill_input(buffer.obs_at(p.start2 + t), buffer.action_at(p.start2 + t),
                            x.row(r++));
    }
    for (int m = 0; m < members; ++m) {
      ensemble.member_net(m).forward(x, out);
      for (size_t i = 0; i < chunk; ++i) {
        const int base = static_cast<int>(i * 2 * hh);
        double r1 = 0.0, r2 = 0.0;
        for (size_t t = 0; t < hh; ++t) {
          r1 += out.at(base + static_cast<int>(t), 0);
          r2 += out.at(base + static_cast<int>(hh + t), 0);
        }
        probs[(begin + i) * static_cast<size_t>(members) + static_cast<size_t>(m)] =
            stable_logistic((r1 - r2) / beta);
      }
    }
  }

  std::vector<double> scores(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    const double* p = probs.data() + i * static_cast<size_t>(members);
    double mean = 0.0;
    for (int m = 0; m < members; ++m) mean += p[m];
    mean /= static_cast<double>(members);
    double var = 0.0;
    for (int m = 0; m < members; ++m) var += (p[m] - mean) * (p[m] - mean);
    scores[i] = std::sqrt(var / static_cast<double>(members));
  }
  return scores;
}

std::vector<size_t> top_disagreement(const std::vector<double>& scores, int k) {
  if (k < 0) throw contract_error("query: negative k");
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  order.resize(std::min(order.size(), static_cast<size_t>(k)));
  return order;
}

}  // namespace motsc::pref
