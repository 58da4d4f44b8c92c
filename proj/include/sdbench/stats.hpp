#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace sdbench::stats {

enum class MwuMode { Auto, Exact, Approx };

struct StatTestResult {
  enum class Method { MannWhitneyU, TTest };
  Method method = Method::MannWhitneyU;
  bool exact = false;           ///< MWU: p from the exact null distribution
  bool equal_variance = true;   ///< t-test: Student (pooled) vs Welch
  double statistic = 0.0;       ///< U for the first sample, or t
  double p_value = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  /// Auto-mode MWU also fills the other p-value for side-by-side reporting.
  double p_exact = -1.0;
  double p_approx = -1.0;

  std::string method_name() const;
};

struct SummaryStats {
  double median = 0.0;
  double std = 0.0;  ///< population standard deviation
  std::size_t n = 0;
};

/// 1-based ranks; tied values share the mean of their rank span.
std::vector<double> rank_with_ties(std::span<const double> values);

/// Two-sided Mann-Whitney U. Auto uses the exact null distribution when both
/// samples have at most 10 values and there are no ties.
StatTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                              MwuMode mode = MwuMode::Auto);

/// Two-sided two-sample t-test (pooled variance by default, Welch otherwise).
StatTestResult t_test(std::span<const double> a, std::span<const double> b,
                      bool equal_variance = true);

SummaryStats summarize(std::span<const double> values);

double accuracy(std::span<const int> preds, std::span<const int> labels);
/// Unweighted mean of per-class F1 over all `num_classes` classes. A class
/// with no predicted and no true members scores 0.
double macro_f1(std::span<const int> preds, std::span<const int> labels, int num_classes);

/// Standard normal CDF.
double normal_cdf(double z);
/// Student t CDF with `df` degrees of freedom.
double student_t_cdf(double t, double df);

}  // namespace sdbench::stats
