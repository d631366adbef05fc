#include "cgmc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace cgmc {

double log_binomial(int n, int k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

void LogSumExp::add(double x) {
  if (count_ == 0) {
    max_ = x;
    scaled_.add(1.0);
  } else if (x <= max_) {
    scaled_.add(std::exp(x - max_));
  } else {
    // rescale the accumulated sum to the new maximum
    const double shifted = scaled_.value() * std::exp(max_ - x);
    scaled_ = KahanSum{};
    scaled_.add(shifted);
    scaled_.add(1.0);
    max_ = x;
  }
  ++count_;
}

double LogSumExp::value() const {
  if (count_ == 0) return -std::numeric_limits<double>::infinity();
  return max_ + std::log(scaled_.value());
}

void RunningStats::add(double x) {
  ++n_;
  const double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
}

double RunningStats::variance() const {
  if (n_ < 2) return 0.0;
  return m2_ / static_cast<double>(n_ - 1);
}

BatchMeans::BatchMeans(std::uint64_t expected_samples, std::uint64_t target_batches) {
  batch_size_ = std::max<std::uint64_t>(1, expected_samples / std::max<std::uint64_t>(2, target_batches));
}

void BatchMeans::add(double x) {
  all_.add(x);
  batch_acc_ += x;
  if (++batch_fill_ == batch_size_) {
    batch_means_.add(batch_acc_ / static_cast<double>(batch_size_));
    batch_acc_ = 0.0;
    batch_fill_ = 0;
  }
}

double BatchMeans::std_error() const {
  const auto nb = batch_means_.count();
  if (nb < 2) return std::numeric_limits<double>::infinity();
  return std::sqrt(batch_means_.variance() / static_cast<double>(nb));
}

double BatchMeans::tau_int() const {
  const double vs = all_.variance();
  if (vs <= 0.0 || batch_means_.count() < 2) return 0.5;
  const double tau = static_cast<double>(batch_size_) * batch_means_.variance() / (2.0 * vs);
  return std::max(0.5, tau);
}

double chi_square_pvalue(double statistic, int dof) {
  if (dof <= 0) return 1.0;
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed,
                               std::span<const double> probabilities, double min_expected) {
  if (observed.size() != probabilities.size()) {
    throw std::invalid_argument("chi_square_gof: size mismatch");
  }
  std::uint64_t total = 0;
  for (auto c : observed) total += c;
  const double n = static_cast<double>(total);

  // Pool bins whose expected counts fall below the threshold.
  double pooled_expected = 0.0;
  std::uint64_t pooled_observed = 0;
  std::vector<std::pair<double, std::uint64_t>> bins;  // (expected, observed)
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = probabilities[i] * n;
    if (e < min_expected) {
      pooled_expected += e;
      pooled_observed += observed[i];
    } else {
      bins.emplace_back(e, observed[i]);
    }
  }
  if (pooled_expected > 0.0) {
    if (pooled_expected >= min_expected || bins.empty()) {
      bins.emplace_back(pooled_expected, pooled_observed);
    } else {
      // fold the leftover into the smallest kept bin
      auto it = std::min_element(bins.begin(), bins.end());
      it->first += pooled_expected;
      it->second += pooled_observed;
    }
  }

  ChiSquareResult result;
  result.dof = static_cast<int>(bins.size()) - 1;
  for (const auto& [e, o] : bins) {
    const double d = static_cast<double>(o) - e;
    result.statistic += d * d / e;
  }
  result.p_value = chi_square_pvalue(result.statistic, result.dof);
  return result;
}

}  // namespace cgmc
