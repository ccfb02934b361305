#include "neuroscope/training/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "neuroscope/common/rng.hpp"

namespace neuroscope {

namespace {

std::map<int, std::vector<std::size_t>> by_class(std::span<const int> labels) {
  std::map<int, std::vector<std::size_t>> m;
  for (std::size_t i = 0; i < labels.size(); ++i) m[labels[i]].push_back(i);
  return m;
}

long round_half_up(double x) { return static_cast<long>(std::floor(x + 0.5 + 1e-9)); }

}  // namespace

SplitResult stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw std::invalid_argument("test_fraction must be in [0, 1)");
  auto classes = by_class(labels);
  for (const auto& [c, idx] : classes)
    if (idx.size() < 2)
      throw std::invalid_argument("class " + std::to_string(c) + " has fewer than 2 samples");

  std::map<int, long> take;
  long total = 0;
  int largest = classes.empty() ? 0 : classes.begin()->first;
  for (const auto& [c, idx] : classes) {
    take[c] = round_half_up(test_fraction * double(idx.size()));
    total += take[c];
    if (idx.size() > classes[largest].size()) largest = c;
  }
  const long want = round_half_up(test_fraction * double(labels.size()));
  if (!classes.empty() && total != want) {
    take[largest] = std::clamp<long>(take[largest] + (want - total), 0, static_cast<long>(classes[largest].size()));
  }

  SplitResult r;
  for (auto& [c, idx] : classes) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    rng.shuffle(idx);
    const auto n_test = static_cast<std::size_t>(take[c]);
    r.test.insert(r.test.end(), idx.begin(), idx.begin() + static_cast<long>(n_test));
    r.train.insert(r.train.end(), idx.begin() + static_cast<long>(n_test), idx.end());
  }
  std::sort(r.train.begin(), r.train.end());
  std::sort(r.test.begin(), r.test.end());
  return r;
}

FoldPlan make_folds(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("make_folds: k must be >= 2");
  auto classes = by_class(labels);
  for (const auto& [c, idx] : classes)
    if (idx.size() < static_cast<std::size_t>(k))
      throw std::invalid_argument("class " + std::to_string(c) + " has fewer than k=" + std::to_string(k) + " samples");

  std::vector<std::vector<std::size_t>> val(static_cast<std::size_t>(k));
  std::size_t offset = 0;
  for (auto& [c, idx] : classes) {
    Rng rng(derive_seed(seed, 0x1000u + static_cast<std::uint64_t>(c)));
    rng.shuffle(idx);
    for (std::size_t i = 0; i < idx.size(); ++i) val[(offset + i) % k].push_back(idx[i]);
    offset = (offset + idx.size()) % k;
  }
  FoldPlan plan;
  plan.k = k;
  for (int f = 0; f < k; ++f) {
    Fold fold;
    fold.val = val[f];
    std::sort(fold.val.begin(), fold.val.end());
    for (int g = 0; g < k; ++g)
      if (g != f) fold.train.insert(fold.train.end(), val[g].begin(), val[g].end());
    std::sort(fold.train.begin(), fold.train.end());
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

Json FoldPlan::to_json() const {
  Json fs = Json::array();
  for (const auto& f : folds) fs.push_back(Json{{"train", f.train}, {"val", f.val}});
  return Json{{"k", k}, {"folds", fs}};
}

FoldPlan FoldPlan::from_json(const Json& j) {
  FoldPlan p;
  p.k = j.at("k").get<int>();
  for (const auto& f : j.at("folds")) {
    p.folds.push_back(Fold{f.at("train").get<std::vector<std::size_t>>(), f.at("val").get<std::vector<std::size_t>>()});
  }
  return p;
}

}  // namespace neuroscope
