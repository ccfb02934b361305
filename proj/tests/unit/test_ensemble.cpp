#include <gtest/gtest.h>

#include <algorithm>

#include "neuroscope/common/rng.hpp"
#include "neuroscope/ensemble/voting.hpp"

using namespace neuroscope;

namespace {

ProbVector pv(double a, double b, double c) { return ProbVector{{a, b, c}}; }

ProbVector random_pv(Rng& rng) {
  const double a = rng.uniform(0.01, 1), b = rng.uniform(0.01, 1), c = rng.uniform(0.01, 1);
  const double s = a + b + c;
  return pv(a / s, b / s, c / s);
}

}  // namespace

TEST(SoftVote, TieExampleGoesToLowestIndex) {
  const std::vector<ProbVector> m{pv(0.6, 0.3, 0.1), pv(0.2, 0.5, 0.3)};
  const EnsemblePrediction e = soft_vote(m);
  EXPECT_NEAR(e.averaged.p[0], 0.4, 1e-15);
  EXPECT_NEAR(e.averaged.p[1], 0.4, 1e-15);
  EXPECT_NEAR(e.averaged.p[2], 0.2, 1e-15);
  EXPECT_EQ(e.predicted_class, 0);
  EXPECT_TRUE(e.tie_broken);
  EXPECT_EQ(e.member_probs.size(), 2u);
}

TEST(SoftVote, IdempotentAndPassthrough) {
  const ProbVector p = pv(0.1, 0.7, 0.2);
  const std::vector<ProbVector> two{p, p};
  const EnsemblePrediction e = soft_vote(two);
  for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(e.averaged.p[c], p.p[c]);
  const std::vector<ProbVector> one{p};
  const EnsemblePrediction s = soft_vote(one);
  EXPECT_EQ(s.averaged.p, p.p);
  EXPECT_EQ(s.predicted_class, 1);
  EXPECT_FALSE(s.tie_broken);
}

TEST(SoftVote, RejectsEmptyAndInvalidMembers) {
  EXPECT_THROW(soft_vote(std::vector<ProbVector>{}), std::invalid_argument);
  EXPECT_THROW(soft_vote(std::vector<ProbVector>{pv(0.5, 0.6, 0.1)}), std::invalid_argument);
  EXPECT_THROW(soft_vote(std::vector<ProbVector>{pv(-0.1, 0.6, 0.5)}), std::invalid_argument);
}

TEST(SoftVote, PermutationInvarianceAndNormalisation) {
  Rng rng(1);
  for (int t = 0; t < 500; ++t) {
    std::vector<ProbVector> m;
    const int n = 1 + static_cast<int>(rng.below(5));
    for (int i = 0; i < n; ++i) m.push_back(random_pv(rng));
    const EnsemblePrediction a = soft_vote(m);
    std::reverse(m.begin(), m.end());
    const EnsemblePrediction b = soft_vote(m);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(a.averaged.p[c], b.averaged.p[c], 1e-15);
    EXPECT_EQ(a.predicted_class, b.predicted_class);
    EXPECT_NEAR(a.averaged.sum(), 1.0, 1e-12);
    // brute-force mean
    for (int c = 0; c < 3; ++c) {
      double s = 0;
      for (const auto& p : m) s += p.p[c];
      EXPECT_NEAR(a.averaged.p[c], s / n, 1e-15);
    }
  }
}

TEST(SoftVote, UnanimityIsPreserved) {
  Rng rng(2);
  for (int t = 0; t < 500; ++t) {
    const ProbVector p = random_pv(rng), q = random_pv(rng);
    if (p.argmax() != q.argmax()) continue;
    const std::vector<ProbVector> m{p, q};
    EXPECT_EQ(soft_vote(m).predicted_class, p.argmax());
  }
}

TEST(HardVote, MajorityFallbackAndSingle) {
  const std::vector<ProbVector> p3{pv(0.5, 0.3, 0.2), pv(0.6, 0.2, 0.2), pv(0.1, 0.8, 0.1)};
  EXPECT_EQ(hard_vote(std::vector<int>{0, 0, 1}, p3), 0);
  const std::vector<ProbVector> p2{pv(0.4, 0.35, 0.25), pv(0.1, 0.8, 0.1)};
  EXPECT_EQ(hard_vote(std::vector<int>{0, 1}, p2), 1);
  EXPECT_EQ(hard_vote(std::vector<int>{2}, std::vector<ProbVector>{pv(0.1, 0.1, 0.8)}), 2);
  EXPECT_THROW(hard_vote(std::vector<int>{0, 1}, std::vector<ProbVector>{pv(1, 0, 0)}), std::invalid_argument);
  EXPECT_THROW(hard_vote(std::vector<int>{}, std::vector<ProbVector>{}), std::invalid_argument);
}

TEST(PredictionRow, CarriesAllFields) {
  const std::vector<ProbVector> m{pv(0.6, 0.3, 0.1), pv(0.2, 0.5, 0.3)};
  const Json j = prediction_row("case1", soft_vote(m));
  EXPECT_EQ(j.at("id"), "case1");
  EXPECT_EQ(j.at("predicted_class"), 0);
  EXPECT_EQ(j.at("member_probs").size(), 2u);
  EXPECT_EQ(j.at("averaged").size(), 3u);
}
