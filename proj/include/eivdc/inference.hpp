#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "eivdc/data_model.hpp"

namespace eivdc {

struct BootstrapConfig {
  int draws = 399;
  double alpha = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class CiMethod { dc_bootstrap, wald };

std::string_view to_string(CiMethod method) noexcept;

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
  CiMethod method = CiMethod::wald;

  bool contains(double value) const noexcept { return lo <= value && value <= hi; }
  double width() const noexcept { return hi - lo; }
};

struct BootstrapResult {
  ConfidenceInterval ci;
  /// One bootstrap median per draw, in draw order.
  std::vector<double> draws;
};

/// Sign-flip bootstrap. Draw d resamples m = |subsamples| residuals with
/// replacement from {+e_j, -e_j} using Rng(cfg.seed, d) and takes the median
/// of beta_hat + e*. The interval is beta_hat plus the alpha/2 and 1 - alpha/2
/// quantiles of (draw - beta_hat).
BootstrapResult dc_bootstrap_ci(std::span<const double> subsamples, double beta_hat,
                                const BootstrapConfig& cfg, unsigned threads = 1);

/// Per-control intervals from the quantiles of the gamma values implied by
/// each beta draw on `design`.
std::vector<ConfidenceInterval> dc_bootstrap_gamma_ci(const CrossSection& design,
                                                      std::span<const double> beta_draws,
                                                      const BootstrapConfig& cfg);

/// estimate -/+ z_{1-alpha/2} * sqrt(variance).
ConfidenceInterval wald_ci(double estimate, double variance, double alpha);

/// Standard normal quantile.
double normal_quantile(double p);

}  // namespace eivdc
