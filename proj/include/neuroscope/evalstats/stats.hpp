#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "neuroscope/common/json_util.hpp"

namespace neuroscope {

// Raised for zero-variance paired differences.
class DegenerateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TTestResult {
  double t = 0;
  double p = 1;  // two-sided
  int df = 0;
};

// d_i = a_i - b_i; t = mean(d) / (sd(d)/sqrt(n)), sd with n-1.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

// Paired d_z = mean(d) / sd(d), so t = d * sqrt(n).
double cohens_d_paired(std::span<const double> a, std::span<const double> b);

struct FriedmanResult {
  double chi2 = 0;
  double p = 1;
  int k = 0, n = 0;
  std::vector<double> rank_sums;  // R_j, rank 1 = lowest score
};

// scores[j][i]: model j on fold i. Average ranks on ties.
FriedmanResult friedman_test(const std::vector<std::vector<double>>& scores);

// Two-sided Student t tail P(|T| >= |t|) and chi-square survival function.
double student_t_two_sided_p(double t, double df);
double chi_square_sf(double x, double df);

struct StatReport {
  TTestResult t;
  double cohens_d = 0;
  FriedmanResult friedman;
  int n = 0, k = 0;
  bool degenerate = false;  // zero-variance differences: t and d undefined

  Json to_json() const;
};

}  // namespace neuroscope
