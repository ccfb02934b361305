#include "neuroscope/service/likert.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <ctime>
#include <fstream>
#include <map>

namespace neuroscope {

Json LikertRecord::to_json() const {
  Json j{{"case_id", case_id},
         {"reviewer_id", reviewer_id},
         {"usefulness", usefulness},
         {"correspondence", correspondence},
         {"timestamp", timestamp}};
  j["comment"] = comment ? Json(*comment) : Json(nullptr);
  return j;
}

namespace {

int likert_score(const Json& j, const char* key) {
  if (!j.contains(key)) throw UsageError(std::string("missing field '") + key + "'");
  const Json& v = j.at(key);
  if (!v.is_number_integer()) throw UsageError(std::string("'") + key + "' must be an integer 1-5");
  const auto x = v.get<long long>();
  if (x < 1 || x > 5) throw UsageError(std::string("'") + key + "' must be in 1..5, got " + std::to_string(x));
  return static_cast<int>(x);
}

std::string required_string(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty())
    throw UsageError(std::string("'") + key + "' must be a non-empty string");
  return j.at(key).get<std::string>();
}

}  // namespace

LikertRecord LikertRecord::from_json(const Json& j) {
  if (!j.is_object()) throw UsageError("score body must be a JSON object");
  LikertRecord r;
  r.case_id = required_string(j, "case_id");
  r.reviewer_id = required_string(j, "reviewer_id");
  r.usefulness = likert_score(j, "usefulness");
  r.correspondence = likert_score(j, "correspondence");
  if (j.contains("comment") && !j.at("comment").is_null()) {
    if (!j.at("comment").is_string()) throw UsageError("'comment' must be a string");
    r.comment = j.at("comment").get<std::string>();
  }
  if (j.contains("timestamp") && j.at("timestamp").is_string()) r.timestamp = j.at("timestamp").get<std::string>();
  return r;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void LikertStore::append(const LikertRecord& r) {
  const std::string line = r.to_json().dump() + "\n";
  std::lock_guard lock(mu_);
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw std::runtime_error("cannot open " + path_.string() + ": " + std::strerror(errno));
  std::size_t done = 0;
  while (done < line.size()) {
    const ssize_t n = ::write(fd, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int e = errno;
      ::close(fd);
      throw std::runtime_error("write failed for " + path_.string() + ": " + std::strerror(e));
    }
    done += static_cast<std::size_t>(n);
  }
  const int rc = ::fsync(fd);
  ::close(fd);
  if (rc != 0) throw std::runtime_error("fsync failed for " + path_.string());
}

std::vector<LikertRecord> LikertStore::load() const {
  std::lock_guard lock(mu_);
  std::vector<LikertRecord> out;
  std::ifstream in(path_);
  if (!in) return out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(LikertRecord::from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path_.string() + ":" + std::to_string(lineno) + ": corrupt record: " + e.what());
    }
  }
  return out;
}

LikertReport aggregate_likert(const std::vector<LikertRecord>& records) {
  LikertReport rep;
  rep.records = static_cast<int>(records.size());
  std::map<std::string, std::vector<const LikertRecord*>> by_reviewer;
  long long su = 0, sc = 0;
  for (const auto& r : records) {
    by_reviewer[r.reviewer_id].push_back(&r);
    su += r.usefulness;
    sc += r.correspondence;
  }
  for (const auto& [id, rs] : by_reviewer) {
    long long u = 0, c = 0;
    for (const auto* r : rs) {
      u += r->usefulness;
      c += r->correspondence;
    }
    const double n = static_cast<double>(rs.size());
    rep.reviewers.push_back({id, static_cast<int>(rs.size()), double(u) / n, double(c) / n});
  }
  if (rep.records > 0) {
    rep.mean_usefulness = double(su) / rep.records;
    rep.mean_correspondence = double(sc) / rep.records;
  }
  return rep;
}

Json LikertReport::to_json() const {
  if (records == 0) return Json{{"records", 0}, {"status", "no scores"}, {"reviewers", Json::array()}, {"text", to_text()}};
  Json rows = Json::array();
  for (const auto& r : reviewers)
    rows.push_back(Json{{"reviewer_id", r.reviewer_id},
                        {"records", r.records},
                        {"usefulness", r.usefulness},
                        {"correspondence", r.correspondence},
                        {"usefulness_text", format_fixed(r.usefulness, 1)},
                        {"correspondence_text", format_fixed(r.correspondence, 1)}});
  return Json{{"records", records},
              {"status", "ok"},
              {"reviewers", rows},
              {"mean_usefulness", mean_usefulness},
              {"mean_correspondence", mean_correspondence},
              {"mean_usefulness_text", format_fixed(mean_usefulness, 1)},
              {"mean_correspondence_text", format_fixed(mean_correspondence, 1)},
              {"text", to_text()}};
}

std::string LikertReport::to_text() const {
  if (records == 0) return "no scores recorded\n";
  std::vector<std::vector<std::string>> cells{
      {"Reviewer", "Usefulness of Explanation (1–5)", "Heatmap Correspondence to Expected Region (1–5)"}};
  for (const auto& r : reviewers)
    cells.push_back({r.reviewer_id, format_fixed(r.usefulness, 1), format_fixed(r.correspondence, 1)});
  cells.push_back({"Average", format_fixed(mean_usefulness, 1), format_fixed(mean_correspondence, 1)});
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s)
      if ((c & 0xC0) != 0x80) ++w;
    return w;
  };
  std::vector<std::size_t> wd(3, 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < 3; ++c) wd[c] = std::max(wd[c], width(row[c]));
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < 3; ++c) {
      out += row[c];
      if (c + 1 < 3) out += std::string(wd[c] - width(row[c]) + 2, ' ');
    }
    out += "\n";
  }
  return out;
}

}  // namespace neuroscope
