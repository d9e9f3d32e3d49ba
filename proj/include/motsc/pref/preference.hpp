#pragma once

#include <string>
#include <vector>

#include "motsc/pref/segment.hpp"

namespace motsc::pref {

// One annotated comparison. label: 1 = first preferred, 2 = second preferred,
// 0 = tie / no preference. Ties are filtered out before storage, but the type
// can represent them so annotation results and stored data share a shape.
struct PreferencePair {
  SegmentData first;
  SegmentData second;
  int label = 0;
  bool annotation_error = false;  // label came from a failed annotation (forced 0)

  bool operator==(const PreferencePair& other) const {
    return first == other.first && second == other.second && label == other.label &&
           annotation_error == other.annotation_error;
  }
};

// Accumulated preference dataset 𝒟. Append-only; JSONL on disk with
// round-trip-exact doubles so a reloaded dataset trains identically.
class PreferenceBuffer {
 public:
  void add(PreferencePair pair);
  size_t size() const { return pairs_.size(); }
  const PreferencePair& operator[](size_t i) const { return pairs_[i]; }
  const std::vector<PreferencePair>& pairs() const { return pairs_; }

  void save_jsonl(std::ostream& os) const;
  void load_jsonl(std::istream& is);  // appends to current contents
  void save_jsonl_file(const std::string& path) const;
  void load_jsonl_file(const std::string& path);

  bool operator==(const PreferenceBuffer& other) const { return pairs_ == other.pairs_; }

 private:
  std::vector<PreferencePair> pairs_;
};

std::string preference_to_json(const PreferencePair& pair);
PreferencePair preference_from_json(const std::string& line);

}  // namespace motsc::pref
