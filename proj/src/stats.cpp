#include "sdbench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "sdbench/errors.hpp"

namespace sdbench::stats {

std::string StatTestResult::method_name() const {
  if (method == Method::MannWhitneyU) return exact ? "MWU (exact)" : "MWU (normal approx.)";
  return equal_variance ? "t-test (pooled)" : "t-test (Welch)";
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw ArgumentError("student_t_cdf: df must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  boost::math::students_t dist(df);
  return boost::math::cdf(dist, t);
}

std::vector<double> rank_with_ties(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("rank_with_ties: empty input");
  for (double v : values)
    if (!std::isfinite(v)) throw ArgumentError("rank_with_ties: non-finite value");
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    // positions i..j (0-based) share ranks i+1..j+1
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

namespace {

struct Ranked {
  std::vector<double> ranks;  // a first, then b
  double u_a = 0.0;
  bool ties = false;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
};

Ranked rank_samples(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ArgumentError("mann_whitney_u: empty sample");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  Ranked r;
  r.ranks = rank_with_ties(pooled);
  const double n1 = static_cast<double>(a.size());
  double ra = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ra += r.ranks[i];
  r.u_a = ra - n1 * (n1 + 1.0) / 2.0;

  std::sort(pooled.begin(), pooled.end());
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j + 1 < pooled.size() && pooled[j + 1] == pooled[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    if (t > 1.0) {
      r.ties = true;
      r.tie_term += t * t * t - t;
    }
    i = j + 1;
  }
  return r;
}

// Null distribution of the rank sum of the first sample, counted over all
// C(N, n1) equally likely assignments. Ranks are doubled so midranks become
// integers, which lets one table cover tied and untied data alike.
double exact_p(const Ranked& r, std::size_t n1, std::size_t n2) {
  const std::size_t N = n1 + n2;
  std::vector<long> doubled(N);
  long total = 0;
  for (std::size_t i = 0; i < N; ++i) {
    doubled[i] = std::lround(2.0 * r.ranks[i]);
    total += doubled[i];
  }
  // ways[k][s]: subsets of size k with doubled rank sum s (doubles avoid
  // overflow for large N; counts stay exact up to 2^53).
  std::vector<std::vector<double>> ways(n1 + 1, std::vector<double>(total + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t i = 0; i < N; ++i) {
    const long d = doubled[i];
    for (std::size_t k = std::min(n1, i + 1); k >= 1; --k)
      for (long s = total; s >= d; --s) ways[k][s] += ways[k - 1][s - d];
  }
  const double nn1 = static_cast<double>(n1);
  const double prod = nn1 * static_cast<double>(n2);
  const double u_min = std::min(r.u_a, prod - r.u_a);
  // U = S/2 - n1(n1+1)/2, so U <= u_min  <=>  S <= 2*u_min + n1(n1+1).
  const double s_cut = 2.0 * u_min + nn1 * (nn1 + 1.0) + 1e-9;
  double hit = 0.0, all = 0.0;
  for (long s = 0; s <= total; ++s) {
    all += ways[n1][s];
    if (static_cast<double>(s) <= s_cut) hit += ways[n1][s];
  }
  return std::min(1.0, 2.0 * hit / all);
}

double approx_p(const Ranked& r, std::size_t n1, std::size_t n2) {
  const double a = static_cast<double>(n1), b = static_cast<double>(n2);
  const double N = a + b;
  const double mean = a * b / 2.0;
  double var = a * b / 12.0 * (N + 1.0);
  if (N > 1.0) var -= a * b * r.tie_term / (12.0 * N * (N - 1.0));
  if (!(var > 0.0)) return 1.0;  // every value tied
  const double dev = std::max(0.0, std::abs(r.u_a - mean) - 0.5);
  const double z = dev / std::sqrt(var);
  return std::min(1.0, 2.0 * normal_cdf(-z));
}

}  // namespace

StatTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                              MwuMode mode) {
  const Ranked r = rank_samples(a, b);
  StatTestResult res;
  res.method = StatTestResult::Method::MannWhitneyU;
  res.n1 = a.size();
  res.n2 = b.size();
  res.statistic = r.u_a;
  bool use_exact = mode == MwuMode::Exact;
  if (mode == MwuMode::Auto) use_exact = a.size() <= 10 && b.size() <= 10 && !r.ties;
  res.exact = use_exact;
  if (mode == MwuMode::Auto) {
    res.p_approx = approx_p(r, res.n1, res.n2);
    res.p_exact = use_exact ? exact_p(r, res.n1, res.n2) : -1.0;
    res.p_value = use_exact ? res.p_exact : res.p_approx;
  } else {
    res.p_value = use_exact ? exact_p(r, res.n1, res.n2) : approx_p(r, res.n1, res.n2);
  }
  return res;
}

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_var(std::span<const double> v, double m) {
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

StatTestResult t_test(std::span<const double> a, std::span<const double> b,
                      bool equal_variance) {
  if (a.size() < 2 || b.size() < 2) throw ArgumentError("t_test: each sample needs n >= 2");
  for (double x : a)
    if (!std::isfinite(x)) throw ArgumentError("t_test: non-finite value");
  for (double x : b)
    if (!std::isfinite(x)) throw ArgumentError("t_test: non-finite value");

  StatTestResult res;
  res.method = StatTestResult::Method::TTest;
  res.equal_variance = equal_variance;
  res.n1 = a.size();
  res.n2 = b.size();
  const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size());
  const double m1 = mean_of(a), m2 = mean_of(b);
  const double v1 = sample_var(a, m1), v2 = sample_var(b, m2);

  double se2 = 0.0, df = 0.0;
  if (equal_variance) {
    const double sp2 = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / (n1 + n2 - 2.0);
    se2 = sp2 * (1.0 / n1 + 1.0 / n2);
    df = n1 + n2 - 2.0;
  } else {
    const double q1 = v1 / n1, q2 = v2 / n2;
    se2 = q1 + q2;
    if (se2 > 0.0)
      df = se2 * se2 / (q1 * q1 / (n1 - 1.0) + q2 * q2 / (n2 - 1.0));
  }

  if (!(se2 > 0.0)) {
    if (m1 == m2) {
      res.statistic = 0.0;
      res.p_value = 1.0;
    } else {
      res.statistic = m1 > m2 ? std::numeric_limits<double>::infinity()
                              : -std::numeric_limits<double>::infinity();
      res.p_value = 0.0;
    }
    return res;
  }
  res.statistic = (m1 - m2) / std::sqrt(se2);
  res.p_value = std::clamp(2.0 * student_t_cdf(-std::abs(res.statistic), df), 0.0, 1.0);
  return res;
}

SummaryStats summarize(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("summarize: empty input");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  SummaryStats s;
  s.n = n;
  s.median = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  s.std = std::sqrt(ss / static_cast<double>(n));
  return s;
}

double accuracy(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) throw ArgumentError("accuracy: length mismatch");
  if (preds.empty()) throw ArgumentError("accuracy: empty input");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(preds.size());
}

double macro_f1(std::span<const int> preds, std::span<const int> labels, int num_classes) {
  if (preds.size() != labels.size()) throw ArgumentError("macro_f1: length mismatch");
  if (preds.empty()) throw ArgumentError("macro_f1: empty input");
  if (num_classes < 1) throw ArgumentError("macro_f1: num_classes must be >= 1");
  const auto K = static_cast<std::size_t>(num_classes);
  std::vector<std::size_t> tp(K, 0), fp(K, 0), fn(K, 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i], y = labels[i];
    if (p < 0 || p >= num_classes || y < 0 || y >= num_classes)
      throw ArgumentError("macro_f1: class id out of range");
    if (p == y) {
      ++tp[static_cast<std::size_t>(p)];
    } else {
      ++fp[static_cast<std::size_t>(p)];
      ++fn[static_cast<std::size_t>(y)];
    }
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    // 2PR/(P+R) simplifies to 2tp/(2tp+fp+fn); an empty class scores 0.
    const double denom = 2.0 * static_cast<double>(tp[k]) + static_cast<double>(fp[k] + fn[k]);
    if (denom > 0.0) sum += 2.0 * static_cast<double>(tp[k]) / denom;
  }
  return sum / static_cast<double>(K);
}

}  // namespace sdbench::stats
