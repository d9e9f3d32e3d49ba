#pragma once

#include <cstddef>
#include <vector>

#include "motsc/core/rng.hpp"
#include "motsc/pref/reward_model.hpp"

namespace motsc::pref {

struct CandidatePair {
  size_t start1 = 0;
  size_t start2 = 0;

  bool operator==(const CandidatePair&) const = default;
};

// Uniform sampling with replacement over the eligible starts; the two starts
// of a pair are always distinct. Needs at least two eligible starts.
std::vector<CandidatePair> sample_candidate_pairs(const std::vector<size_t>& eligible_starts,
                                                  int count, core::Rng& rng);

// Ensemble disagreement per candidate: population std over the members' win
// probabilities P_m(σ¹ ≻ σ²).
std::vector<double> pairwise_disagreement(const RewardEnsemble& ensemble,
                                          const agent::ReplayBuffer& buffer,
                                          const std::vector<CandidatePair>& pairs, int h);

// Indices of the k highest-scoring candidates in descending score order;
// equal scores keep their sampling order. k is capped at scores.size().
std::vector<size_t> top_disagreement(const std::vector<double>& scores, int k);

}  // namespace motsc::pref
