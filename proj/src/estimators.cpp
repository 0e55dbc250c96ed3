#include "eivdc/estimators.hpp"

#include <cmath>

#include "eivdc/errors.hpp"
#include "eivdc/numeric.hpp"

namespace eivdc {
namespace {

Vector gather(const Vector& v, std::span<const Index> idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) out(static_cast<Index>(r)) = v(idx[r]);
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const Index> idx) {
  Matrix out(static_cast<Index>(idx.size()), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Index>(r)) = m.row(idx[r]);
  return out;
}

void check_denominator(const MomentSums& s) {
  const double scale = std::sqrt(s.s_x4 * s.s_y2);
  if (!(std::abs(s.s_x2y) > kDenominatorTolerance * scale)) {
    fail(ErrorKind::near_singular_denominator,
         "sum x^2*y is numerically zero relative to sqrt(sum x^4 * sum y^2)");
  }
}

}  // namespace

MomentSums moment_sums(const Vector& x, const Vector& y) {
  CompensatedSum xy2, x2y, xy, x2, x4, y2;
  for (Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    const double yi = y(i);
    const double xx = xi * xi;
    xy2 += xi * yi * yi;
    x2y += xx * yi;
    xy += xi * yi;
    x2 += xx;
    x4 += xx * xx;
    y2 += yi * yi;
  }
  return MomentSums{xy2.value(), x2y.value(), xy.value(), x2.value(),
                    x4.value(),  y2.value(),  x.size()};
}

LeastSquares::LeastSquares(const Matrix& z, const std::string& what)
    : qr_(z), z_(z), cols_(z.cols()) {
  if (z.rows() < z.cols() || qr_.rank() < z.cols()) {
    fail(ErrorKind::singular_design, what + ": control matrix is rank deficient (rank " +
                                         std::to_string(qr_.rank()) + " of " +
                                         std::to_string(z.cols()) + ")");
  }
}

Vector LeastSquares::coef(const Vector& v) const { return qr_.solve(v); }

Vector LeastSquares::residual(const Vector& v) const { return v - z_ * coef(v); }

OlsResult ols(const CrossSection& cs) {
  const Index n = cs.size();
  const Index k = cs.num_controls();
  Matrix design(n, k + 1);
  design.col(0) = cs.x();
  design.rightCols(k) = cs.z();
  const LeastSquares fit(design, "OLS");
  const Vector b = fit.coef(cs.y());
  const Vector e = cs.y() - design * b;

  const Matrix bread = (design.transpose() * design).inverse();
  const Matrix meat = design.transpose() * e.array().square().matrix().asDiagonal() * design;

  OlsResult out;
  out.beta = b(0);
  out.gamma = b.tail(k);
  out.cov = bread * meat * bread;
  return out;
}

std::pair<Vector, Vector> residualize(const CrossSection& cs) {
  if (cs.num_controls() == 0) return {cs.x(), cs.y()};
  const LeastSquares fit(cs.z(), "full sample");
  return {fit.residual(cs.x()), fit.residual(cs.y())};
}

Geary3mResult geary_3m(const CrossSection& cs) {
  const auto [x, y] = residualize(cs);
  const MomentSums s = moment_sums(x, y);
  check_denominator(s);

  Geary3mResult out;
  out.beta = s.s_xy2 / s.s_x2y;
  out.identification_strength = std::abs(s.s_x2y) / std::sqrt(s.s_x4 * s.s_y2);
  out.weak_identification =
      out.identification_strength < std::pow(static_cast<double>(s.n), -0.25);
  if (cs.num_controls() > 0) {
    const LeastSquares fit(cs.z(), "full sample");
    out.gamma = fit.coef(cs.y() - out.beta * cs.x());
  } else {
    out.gamma = Vector(0);
  }
  return out;
}

double asy_var_3m(const CrossSection& cs, double beta_hat) {
  const auto [x, y] = residualize(cs);
  const MomentSums s = moment_sums(x, y);
  check_denominator(s);
  CompensatedSum num;
  for (Index i = 0; i < x.size(); ++i) {
    const double r = y(i) - x(i) * beta_hat;
    num += x(i) * x(i) * y(i) * y(i) * r * r;
  }
  const double n = static_cast<double>(s.n);
  const double mean_den = s.s_x2y / n;
  return (num.value() / n) / (mean_den * mean_den) / n;
}

Matrix gamma_cov_3m(const CrossSection& cs, double beta_hat, const Vector& gamma_hat) {
  const Index k = cs.num_controls();
  if (k == 0) return Matrix(0, 0);
  const auto [xr, yr] = residualize(cs);
  const MomentSums s = moment_sums(xr, yr);
  check_denominator(s);
  const double n = static_cast<double>(cs.size());
  const Vector psi_beta =
      (xr.array() * yr.array() * (yr.array() - beta_hat * xr.array())).matrix() / (s.s_x2y / n);
  const Matrix& z = cs.z();
  const Vector resid = cs.y() - beta_hat * cs.x() - z * gamma_hat;
  const Matrix zz_inv = (z.transpose() * z / n).inverse();
  const Vector zx = z.transpose() * cs.x() / n;
  // Row i: z_i * resid_i - zx * psi_beta_i, then premultiplied by zz_inv.
  const Matrix scores = (z.array().colwise() * resid.array()).matrix() - psi_beta * zx.transpose();
  const Matrix psi = scores * zz_inv.transpose();
  return psi.transpose() * psi / (n * n);
}

Residualized partial_out(const CrossSection& cs, std::span<const Index> idx1,
                         std::span<const Index> idx2) {
  Residualized out;
  out.x_dot = gather(cs.x(), idx1);
  out.y_dot = gather(cs.y(), idx1);
  out.x_ddot = gather(cs.x(), idx2);
  out.y_ddot = gather(cs.y(), idx2);
  if (cs.num_controls() == 0) return out;

  const LeastSquares first(gather_rows(cs.z(), idx1), "first subset");
  out.x_dot = first.residual(out.x_dot);
  out.y_dot = first.residual(out.y_dot);
  const LeastSquares second(gather_rows(cs.z(), idx2), "second subset");
  out.x_ddot = second.residual(out.x_ddot);
  out.y_ddot = second.residual(out.y_ddot);
  return out;
}

Matrix gamma_ci_draws(const CrossSection& cs, std::span<const double> beta_draws) {
  const Index k = cs.num_controls();
  Matrix out(static_cast<Index>(beta_draws.size()), k);
  if (k == 0) return out;
  // The map beta -> gamma is affine: a - beta * c.
  const LeastSquares fit(cs.z(), "full sample");
  const Vector a = fit.coef(cs.y());
  const Vector c = fit.coef(cs.x());
  for (std::size_t d = 0; d < beta_draws.size(); ++d) {
    out.row(static_cast<Index>(d)) = (a - beta_draws[d] * c).transpose();
  }
  return out;
}

}  // namespace eivdc
