#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>

#include "eivdc/data_model.hpp"

namespace eivdc {

/// Moment sums used by the ratio estimators, accumulated with compensation.
struct MomentSums {
  double s_xy2 = 0.0;  // sum x*y^2
  double s_x2y = 0.0;  // sum x^2*y
  double s_xy = 0.0;   // sum x*y
  double s_x2 = 0.0;   // sum x^2
  double s_x4 = 0.0;   // sum x^4
  double s_y2 = 0.0;   // sum y^2
  Index n = 0;
};

MomentSums moment_sums(const Vector& x, const Vector& y);

/// Least-squares fit on a fixed design, factored once.
class LeastSquares {
 public:
  /// Throws singular_design (prefixed with `what`) when z is rank deficient.
  explicit LeastSquares(const Matrix& z, const std::string& what = "design");

  Vector coef(const Vector& v) const;
  Vector residual(const Vector& v) const;
  Index cols() const noexcept { return cols_; }

 private:
  Eigen::ColPivHouseholderQR<Matrix> qr_;
  Matrix z_;
  Index cols_;
};

struct OlsResult {
  double beta = 0.0;
  Vector gamma;
  /// HC0 sandwich covariance of (beta, gamma).
  Matrix cov;
};

/// Least squares of y on [x, z].
OlsResult ols(const CrossSection& cs);

struct Geary3mResult {
  double beta = 0.0;
  Vector gamma;
  /// |sum x^2 y| / sqrt(sum x^4 * sum y^2) on the residualized data.
  double identification_strength = 0.0;
  /// Set when the strength falls below n^(-1/4).
  bool weak_identification = false;
};

/// Ratio sum x*y^2 / sum x^2*y after residualizing x and y on z over the whole
/// sample. gamma is the least-squares fit of y - x*beta on z.
Geary3mResult geary_3m(const CrossSection& cs);

/// Variance of the 3M estimate:
/// (1/n) * mean(x^2 y^2 (y - x b)^2) / mean(x^2 y)^2 on residualized data.
double asy_var_3m(const CrossSection& cs, double beta_hat);

/// Covariance of the 3M gamma estimate from the joint influence functions:
/// psi_gamma = (z'z/n)^{-1} [z (y - x b - z'g) - (z'x/n) psi_beta] with
/// psi_beta = x~ y~ (y~ - x~ b) / mean(x~^2 y~) on residualized x~, y~.
Matrix gamma_cov_3m(const CrossSection& cs, double beta_hat, const Vector& gamma_hat);

/// Relative size below which the 3M denominator is treated as zero.
inline constexpr double kDenominatorTolerance = 1e-12;

struct Residualized {
  Vector x_dot, y_dot;    // first subset
  Vector x_ddot, y_ddot;  // second subset
};

/// Residualizes each subset on its own controls. With no controls the raw
/// subset values are returned.
Residualized partial_out(const CrossSection& cs, std::span<const Index> idx1,
                         std::span<const Index> idx2);

/// One row per beta draw: (z'z)^{-1} z'(y - x*beta).
Matrix gamma_ci_draws(const CrossSection& cs, std::span<const double> beta_draws);

/// Residuals of x and y on the full-sample z (raw values when k = 0).
std::pair<Vector, Vector> residualize(const CrossSection& cs);

}  // namespace eivdc
