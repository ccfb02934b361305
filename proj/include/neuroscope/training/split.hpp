#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "neuroscope/common/json_util.hpp"

namespace neuroscope {

struct SplitResult {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

// Per-class test count round-half-up(f * N_c); if those do not sum to
// round-half-up(f * N) the largest class absorbs the difference. Throws
// std::invalid_argument when a class has fewer than 2 samples or f is
// outside [0, 1).
SplitResult stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed);

struct Fold {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> val;    // ascending
};

struct FoldPlan {
  int k = 0;
  std::vector<Fold> folds;

  Json to_json() const;
  static FoldPlan from_json(const Json& j);
};

// Each class is shuffled and dealt round-robin over the folds; the dealing
// offset carries over between classes so fold sizes stay within one.
// Throws std::invalid_argument for k < 2 or a class with fewer than k samples.
FoldPlan make_folds(std::span<const int> labels, int k, std::uint64_t seed);

}  // namespace neuroscope
