#include "eivdc/inference.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <random>

#include "eivdc/errors.hpp"
#include "eivdc/estimators.hpp"
#include "eivdc/numeric.hpp"
#include "eivdc/parallel.hpp"

namespace eivdc {
namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::parameter, "alpha must lie in (0, 1)");
}

ConfidenceInterval quantile_interval(std::vector<double> values, double alpha, CiMethod method) {
  std::sort(values.begin(), values.end());
  return ConfidenceInterval{quantile_sorted(values, alpha / 2.0),
                            quantile_sorted(values, 1.0 - alpha / 2.0), 1.0 - alpha, method};
}

}  // namespace

void BootstrapConfig::validate() const {
  if (draws < 1) fail(ErrorKind::parameter, "bootstrap draws must be at least 1");
  check_alpha(alpha);
}

std::string_view to_string(CiMethod method) noexcept {
  return method == CiMethod::dc_bootstrap ? "dc_bootstrap" : "wald";
}

BootstrapResult dc_bootstrap_ci(std::span<const double> subsamples, double beta_hat,
                                const BootstrapConfig& cfg, unsigned threads) {
  cfg.validate();
  if (subsamples.empty()) fail(ErrorKind::parameter, "no subsample estimates to resample");
  const std::size_t m = subsamples.size();
  std::vector<double> residuals;
  residuals.reserve(2 * m);
  for (const double v : subsamples) residuals.push_back(v - beta_hat);
  for (const double v : subsamples) residuals.push_back(beta_hat - v);

  BootstrapResult out;
  out.draws.resize(static_cast<std::size_t>(cfg.draws));
  parallel_for(out.draws.size(), threads, [&](std::size_t d) {
    Rng rng(cfg.seed, d);
    std::uniform_int_distribution<std::size_t> pick(0, 2 * m - 1);
    std::vector<double> sample(m);
    for (auto& s : sample) s = beta_hat + residuals[pick(rng)];
    out.draws[d] = median(sample);
  });

  std::vector<double> centered(out.draws.size());
  std::transform(out.draws.begin(), out.draws.end(), centered.begin(),
                 [&](double v) { return v - beta_hat; });
  const auto q = quantile_interval(std::move(centered), cfg.alpha, CiMethod::dc_bootstrap);
  out.ci = ConfidenceInterval{beta_hat + q.lo, beta_hat + q.hi, 1.0 - cfg.alpha,
                              CiMethod::dc_bootstrap};
  return out;
}

std::vector<ConfidenceInterval> dc_bootstrap_gamma_ci(const CrossSection& design,
                                                      std::span<const double> beta_draws,
                                                      const BootstrapConfig& cfg) {
  check_alpha(cfg.alpha);
  if (design.num_controls() == 0) fail(ErrorKind::parameter, "no controls to build gamma intervals for");
  if (beta_draws.empty()) fail(ErrorKind::parameter, "no bootstrap draws");
  const Matrix draws = gamma_ci_draws(design, beta_draws);
  std::vector<ConfidenceInterval> out;
  for (Index j = 0; j < draws.cols(); ++j) {
    std::vector<double> col(draws.col(j).data(), draws.col(j).data() + draws.rows());
    out.push_back(quantile_interval(std::move(col), cfg.alpha, CiMethod::dc_bootstrap));
  }
  return out;
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

ConfidenceInterval wald_ci(double estimate, double variance, double alpha) {
  check_alpha(alpha);
  if (!(variance >= 0.0)) fail(ErrorKind::parameter, "variance must be non-negative");
  const double half = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(variance);
  return ConfidenceInterval{estimate - half, estimate + half, 1.0 - alpha, CiMethod::wald};
}

}  // namespace eivdc
