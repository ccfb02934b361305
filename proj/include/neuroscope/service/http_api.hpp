#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "neuroscope/service/run.hpp"

namespace neuroscope {

// Case-review HTTP service over a run's bundles and Likert store.
//   GET  /api/cases                       summaries
//   GET  /api/cases/{id}                  full bundle with artifact URLs
//   GET  /api/cases/{id}/saliency?threshold=F
//   GET  /api/cases/{id}/{image,overlay}.png, /saliency.png?threshold=F
//   POST /api/cases/{id}/scores           Likert record, stored before 200
//   GET  /api/report                      aggregates
// Static files from `ui_dir` are served under / when given.
class ReviewService {
 public:
  explicit ReviewService(const RunDir& run, std::optional<std::filesystem::path> ui_dir = std::nullopt);
  ~ReviewService();
  ReviewService(const ReviewService&) = delete;
  ReviewService& operator=(const ReviewService&) = delete;

  // port 0 picks a free port. Returns false when the port cannot be bound.
  bool bind(const std::string& host, int port);
  int port() const;
  // Blocks until stop().
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace neuroscope
