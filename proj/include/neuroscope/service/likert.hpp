#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "neuroscope/common/json_util.hpp"
#include "neuroscope/service/run.hpp"

namespace neuroscope {

struct LikertRecord {
  std::string case_id;
  std::string reviewer_id;
  int usefulness = 0;      // 1..5
  int correspondence = 0;  // 1..5
  std::optional<std::string> comment;
  std::string timestamp;  // ISO-8601 UTC

  Json to_json() const;
  // Throws UsageError naming the offending field. A missing timestamp is
  // left empty for the caller to fill.
  static LikertRecord from_json(const Json& j);
};

// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

// Append-only newline-delimited JSON. Appends are serialized by a mutex and
// flushed to disk (fsync) before returning.
class LikertStore {
 public:
  explicit LikertStore(std::filesystem::path path) : path_(std::move(path)) {}

  void append(const LikertRecord& r);
  std::vector<LikertRecord> load() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
};

struct ReviewerRow {
  std::string reviewer_id;
  int records = 0;
  double usefulness = 0, correspondence = 0;  // means
};

struct LikertReport {
  int records = 0;
  std::vector<ReviewerRow> reviewers;  // sorted by reviewer id
  double mean_usefulness = 0, mean_correspondence = 0;  // over all records

  Json to_json() const;  // full-precision means plus one-decimal strings
  // Reviewer | Usefulness of Explanation (1–5) | Heatmap Correspondence to
  // Expected Region (1–5), with an Average row; "no scores recorded" when empty.
  std::string to_text() const;
};

LikertReport aggregate_likert(const std::vector<LikertRecord>& records);

}  // namespace neuroscope
