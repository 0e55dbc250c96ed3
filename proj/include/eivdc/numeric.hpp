#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace eivdc {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double value) noexcept {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      compensation_ += (sum_ - t) + value;
    } else {
      compensation_ += (value - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(double value) noexcept {
    add(value);
    return *this;
  }

  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// Sample median; the midpoint of the two central order statistics when the
/// count is even. Throws parameter error on empty input.
double median(std::span<const double> values);

/// Empirical quantile with linear interpolation between order statistics
/// (position p*(m-1) on zero-based sorted data). `sorted` must be ascending.
double quantile_sorted(std::span<const double> sorted, double p);

/// Convenience wrapper that copies and sorts.
double quantile(std::span<const double> values, double p);

double mean(std::span<const double> values);

/// Sample standard deviation with the n-1 divisor; 0 for fewer than 2 values.
double stddev(std::span<const double> values);

}  // namespace eivdc
