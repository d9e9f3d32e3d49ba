#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "motsc/pref/preference.hpp"
#include "motsc/pref/segment.hpp"

namespace motsc::annotate {

// Operational failure while talking to an annotation backend (transport,
// HTTP status, malformed reply). Retried by the caller, not fatal.
struct annotation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SegmentPairQuery {
  pref::SegmentData first;
  pref::SegmentData second;
};

struct AnnotationResult {
  int label = 0;      // 1 = first preferred, 2 = second, 0 = tie/undecided
  bool error = false;  // annotation failed after retries; label forced to 0
  std::string response;  // raw backend reply (oracle trace or LLM text)
};

// A preference teacher. Batch-level because some teachers normalize across
// the batch (scripted oracle) or parallelize over it (LLM). Results align
// one-to-one with the queries.
class Annotator {
 public:
  virtual ~Annotator() = default;
  virtual std::vector<AnnotationResult> annotate_batch(
      const std::vector<SegmentPairQuery>& queries) = 0;
  virtual std::string name() const = 0;
  // Same queries always yield the same labels. Lets a resumed run re-derive
  // logged answers instead of trusting (or re-paying for) them.
  virtual bool deterministic() const = 0;
};

struct FilterStats {
  size_t total = 0;
  size_t ties = 0;    // label 0 from a successful annotation
  size_t errors = 0;  // label 0 forced by failures
  size_t stored = 0;  // decided labels added to the dataset

  double tie_fraction() const {
    return total == 0 ? 0.0 : static_cast<double>(ties + errors) / static_cast<double>(total);
  }
};

// Keeps decided labels (1/2), drops ties and failures. Appends to `out`.
FilterStats filter_and_store(const std::vector<SegmentPairQuery>& queries,
                             const std::vector<AnnotationResult>& results,
                             pref::PreferenceBuffer& out);

}  // namespace motsc::annotate
