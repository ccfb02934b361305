#include "neuroscope/evalstats/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <numeric>

namespace neuroscope {

namespace {

struct DiffStats {
  double mean, sd;
  std::size_t n;
};

DiffStats diff_stats(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired samples differ in length");
  if (a.size() < 2) throw std::invalid_argument("paired test needs n >= 2");
  const std::size_t n = a.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] - b[i];
  const double mean = sum / double(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = (a[i] - b[i]) - mean;
    ss += e * e;
  }
  const double sd = std::sqrt(ss / double(n - 1));
  // a constant shift such as 1.0 - 0.9 vs 0.9 - 0.8 leaves only roundoff
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  if (!(sd > 64.0 * std::numeric_limits<double>::epsilon() * scale))
    throw DegenerateError("degenerate differences: zero variance");
  return {mean, sd, n};
}

}  // namespace

double student_t_two_sided_p(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  boost::math::students_t dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

double chi_square_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  boost::math::chi_squared dist(df);
  return std::clamp(boost::math::cdf(boost::math::complement(dist, x)), 0.0, 1.0);
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  const DiffStats d = diff_stats(a, b);
  TTestResult r;
  r.df = static_cast<int>(d.n) - 1;
  r.t = d.mean / (d.sd / std::sqrt(double(d.n)));
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

double cohens_d_paired(std::span<const double> a, std::span<const double> b) {
  const DiffStats d = diff_stats(a, b);
  return d.mean / d.sd;
}

FriedmanResult friedman_test(const std::vector<std::vector<double>>& scores) {
  const std::size_t k = scores.size();
  if (k < 2) throw std::invalid_argument("friedman test needs k >= 2 models");
  const std::size_t n = scores[0].size();
  if (n < 2) throw std::invalid_argument("friedman test needs n >= 2 folds");
  for (const auto& row : scores)
    if (row.size() != n) throw std::invalid_argument("friedman test: ragged score table");

  FriedmanResult r;
  r.k = static_cast<int>(k);
  r.n = static_cast<int>(n);
  r.rank_sums.assign(k, 0.0);
  std::vector<std::size_t> order(k);
  for (std::size_t i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x][i] < scores[y][i]; });
    for (std::size_t s = 0; s < k;) {
      std::size_t e = s;
      while (e + 1 < k && scores[order[e + 1]][i] == scores[order[s]][i]) ++e;
      const double avg = (double(s + 1) + double(e + 1)) / 2.0;
      for (std::size_t q = s; q <= e; ++q) r.rank_sums[order[q]] += avg;
      s = e + 1;
    }
  }
  double sum_sq = 0.0;
  for (double R : r.rank_sums) sum_sq += R * R;
  const double nd = double(n), kd = double(k);
  r.chi2 = 12.0 / (nd * kd * (kd + 1.0)) * sum_sq - 3.0 * nd * (kd + 1.0);
  if (std::abs(r.chi2) < 1e-9) r.chi2 = 0.0;  // rounding residue for all-tied tables
  r.p = chi_square_sf(r.chi2, kd - 1.0);
  return r;
}

Json StatReport::to_json() const {
  Json rs = friedman.rank_sums;
  return Json{{"t", degenerate ? Json(nullptr) : Json(t.t)},
              {"p_t", degenerate ? Json(nullptr) : Json(t.p)},
              {"df", t.df},
              {"cohens_d", degenerate ? Json(nullptr) : Json(cohens_d)},
              {"degenerate", degenerate},
              {"friedman_chi2", friedman.chi2},
              {"p_friedman", friedman.p},
              {"rank_sums", rs},
              {"n", n},
              {"k", k}};
}

}  // namespace neuroscope
