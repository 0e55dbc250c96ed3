#include "eivdc/numeric.hpp"

#include <algorithm>

#include "eivdc/errors.hpp"

namespace eivdc {

double median(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::parameter, "median of an empty set");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) fail(ErrorKind::parameter, "quantile of an empty set");
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::parameter, "quantile level outside [0, 1]");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> values, double p) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, p);
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  CompensatedSum s;
  for (double v : values) s += v;
  return s.value() / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  CompensatedSum s;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s.value() / static_cast<double>(values.size() - 1));
}

}  // namespace eivdc
