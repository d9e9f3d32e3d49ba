#pragma once

#include <string>
#include <vector>

#include "motsc/annotate/annotator.hpp"

namespace motsc::annotate {

// One answered query: which session asked it, its position in that session's
// batch, the segment start indices it compared, and the teacher's verdict.
struct AnnotationRecord {
  int session = 0;
  int index = 0;
  int64_t start1 = 0;
  int64_t start2 = 0;
  int label = 0;
  bool error = false;
  std::string response;

  bool operator==(const AnnotationRecord&) const = default;
};

// Append-only JSONL journal of every annotation a run has paid for. A
// resumed run replays it: logged answers are reused (or, for deterministic
// teachers, re-derived and cross-checked) so the teacher is only asked about
// queries past the end of the journal.
class AnnotationLog {
 public:
  AnnotationLog() = default;                // in-memory, nothing persisted
  explicit AnnotationLog(std::string path); // loads existing entries, appends after them

  void append(const AnnotationRecord& rec);
  const std::vector<AnnotationRecord>& records() const { return records_; }
  std::vector<AnnotationRecord> session_records(int session) const;

  const std::string& path() const { return path_; }

 private:
  std::string path_;  // empty = in-memory
  std::vector<AnnotationRecord> records_;
};

}  // namespace motsc::annotate
