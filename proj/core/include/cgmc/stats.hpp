#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cgmc {

/// log of the binomial coefficient C(n, k), via lgamma.
double log_binomial(int n, int k);

/// Compensated (Kahan) accumulator for long enumeration sums.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - compensation_;
    const double t = sum_ + y;
    compensation_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// Streaming log(sum(exp(x_i))) accumulator; never materializes exponentials.
class LogSumExp {
 public:
  void add(double x);
  double value() const;  // log of the accumulated sum
  std::uint64_t count() const { return count_; }

 private:
  double max_ = 0.0;
  KahanSum scaled_;
  std::uint64_t count_ = 0;
};

/// Welford running mean/variance.
class RunningStats {
 public:
  void add(double x);
  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;  // sample variance (n-1 normalization)

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Batch-means error estimator for correlated samples. The total number of
/// samples must be announced up front so the batch size is fixed.
class BatchMeans {
 public:
  explicit BatchMeans(std::uint64_t expected_samples, std::uint64_t target_batches = 32);

  void add(double x);
  std::uint64_t count() const { return all_.count(); }
  double mean() const { return all_.mean(); }
  /// Standard error of the mean from completed batches.
  double std_error() const;
  /// Integrated autocorrelation time estimate, >= 0.5 (0.5 = uncorrelated).
  double tau_int() const;

 private:
  std::uint64_t batch_size_;
  RunningStats all_;
  RunningStats batch_means_;
  double batch_acc_ = 0.0;
  std::uint64_t batch_fill_ = 0;
};

/// Upper tail p-value of the chi-square distribution with `dof` degrees of
/// freedom evaluated at `statistic`.
double chi_square_pvalue(double statistic, int dof);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Goodness-of-fit test of observed counts against model probabilities.
/// Bins with expected count below `min_expected` are pooled before the test.
ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed,
                               std::span<const double> probabilities,
                               double min_expected = 5.0);

}  // namespace cgmc
