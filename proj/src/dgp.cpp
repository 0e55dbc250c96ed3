#include "eivdc/dgp.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>

#include "eivdc/errors.hpp"
#include "text.hpp"

namespace eivdc {
namespace {

void require(bool ok, const std::string& message) {
  if (!ok) fail(ErrorKind::parameter, message);
}

Eigen::Matrix2d lower_factor(const Eigen::Matrix2d& s, ErrorKind kind, const char* what) {
  const double det = s(0, 0) * s(1, 1) - s(1, 0) * s(1, 0);
  if (!(s(0, 0) > 0.0) || !(s(1, 1) > 0.0) || !(det > 1e-12 * s(0, 0) * s(1, 1))) {
    fail(kind, std::string(what) + " covariance is singular or not positive definite");
  }
  Eigen::LLT<Eigen::Matrix2d> llt(s);
  return llt.matrixL();
}

}  // namespace

void DgpConfig::validate() const {
  require(n >= 2, "n must be at least 2");
  require(periods >= 1, "periods must be at least 1");
  require(shape_u > 0 && shape_e > 0 && shape_v_xi > 0 && shape_v_z > 0,
          "gamma shapes must be positive");
  require(scale > 0, "gamma scale must be positive");
  require(tau_sq > 0 && tau_sq <= 1, "tau_sq must lie in (0, 1]");
  require(sigma_y_sq > 0, "sigma_y_sq must be positive");
  require(std::abs(phi_xi) < 1 && std::abs(phi_z) < 1, "AR coefficients must satisfy |phi| < 1");
  require(c11 > 0 && c22 > 0 && c11 * c22 - c21 * c21 > 0,
          "covariance target C must be positive definite");
  require(burn_in >= 0, "burn_in must be non-negative");
  require(beta_by_period.empty() ||
              static_cast<int>(beta_by_period.size()) == periods,
          "beta_by_period must have one entry per period");
}

bool DgpConfig::set(const std::string& key, const std::string& value) {
  using text::to_double;
  if (key == "n") n = text::to_int<int>(key, value);
  else if (key == "periods") periods = text::to_int<int>(key, value);
  else if (key == "beta") beta = to_double(key, value);
  else if (key == "gamma") gamma = to_double(key, value);
  else if (key == "shape_u") shape_u = to_double(key, value);
  else if (key == "shape_e") shape_e = to_double(key, value);
  else if (key == "shape_v_xi") shape_v_xi = to_double(key, value);
  else if (key == "shape_v_z") shape_v_z = to_double(key, value);
  else if (key == "scale") scale = to_double(key, value);
  else if (key == "phi_xi") phi_xi = to_double(key, value);
  else if (key == "phi_z") phi_z = to_double(key, value);
  else if (key == "delta_xi") delta_xi = to_double(key, value);
  else if (key == "delta_z") delta_z = to_double(key, value);
  else if (key == "tau_sq") tau_sq = to_double(key, value);
  else if (key == "c11") c11 = to_double(key, value);
  else if (key == "c21") c21 = to_double(key, value);
  else if (key == "c22") c22 = to_double(key, value);
  else if (key == "mu_y") mu_y = to_double(key, value);
  else if (key == "sigma_y_sq") sigma_y_sq = to_double(key, value);
  else if (key == "burn_in") burn_in = text::to_int<int>(key, value);
  else if (key == "seed") seed = text::to_int<std::uint64_t>(key, value);
  else if (key == "first_year") first_year = text::to_int<int>(key, value);
  else if (key == "beta_by_period") {
    beta_by_period.clear();
    if (!text::trim(value).empty()) {
      for (const auto& part : text::split(value, ',')) {
        beta_by_period.push_back(to_double(key, part));
      }
    }
  } else {
    return false;
  }
  return true;
}

void DgpConfig::write(std::ostream& out) const {
  using text::format;
  out << "n=" << n << '\n'
      << "periods=" << periods << '\n'
      << "beta=" << format(beta) << '\n'
      << "gamma=" << format(gamma) << '\n'
      << "shape_u=" << format(shape_u) << '\n'
      << "shape_e=" << format(shape_e) << '\n'
      << "shape_v_xi=" << format(shape_v_xi) << '\n'
      << "shape_v_z=" << format(shape_v_z) << '\n'
      << "scale=" << format(scale) << '\n'
      << "phi_xi=" << format(phi_xi) << '\n'
      << "phi_z=" << format(phi_z) << '\n'
      << "delta_xi=" << format(delta_xi) << '\n'
      << "delta_z=" << format(delta_z) << '\n'
      << "tau_sq=" << format(tau_sq) << '\n'
      << "c11=" << format(c11) << '\n'
      << "c21=" << format(c21) << '\n'
      << "c22=" << format(c22) << '\n'
      << "mu_y=" << format(mu_y) << '\n'
      << "sigma_y_sq=" << format(sigma_y_sq) << '\n'
      << "burn_in=" << burn_in << '\n'
      << "seed=" << seed << '\n'
      << "first_year=" << first_year << '\n';
  out << "beta_by_period=";
  for (std::size_t t = 0; t < beta_by_period.size(); ++t) {
    if (t > 0) out << ',';
    out << format(beta_by_period[t]);
  }
  out << '\n';
}

void read_dgp_config(std::istream& in, DgpConfig& cfg) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = text::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::parse, "config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = text::trim(line.substr(0, eq));
    if (!cfg.set(key, line.substr(eq + 1))) {
      fail(ErrorKind::parse, "config line " + std::to_string(line_no) + ": unknown key '" +
                                 key + "'");
    }
  }
}

PanelData SimulatedPanel::to_panel() const {
  const Index n = x.rows();
  const Index periods = x.cols();
  const Index rows = n * periods;
  std::vector<std::int64_t> firm;
  std::vector<int> year;
  firm.reserve(static_cast<std::size_t>(rows));
  year.reserve(static_cast<std::size_t>(rows));
  Vector yv(rows), xv(rows);
  Matrix zv(rows, 1);
  Index r = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index t = 0; t < periods; ++t, ++r) {
      firm.push_back(i);
      year.push_back(first_year + static_cast<int>(t));
      yv(r) = y(i, t);
      xv(r) = x(i, t);
      zv(r, 0) = z(i, t);
    }
  }
  return PanelData(std::move(firm), std::move(year), std::move(yv), std::move(xv),
                   std::move(zv), {"z"}, {},
                   PanelData::Options{periods > 1});
}

Vector sample_std_gamma(double shape, double scale, Index count, Rng& rng) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    fail(ErrorKind::parameter, "gamma shape and scale must be positive");
  }
  if (count < 0) fail(ErrorKind::parameter, "negative sample count");
  std::gamma_distribution<double> gamma(shape, scale);
  const double mean = shape * scale;
  const double sd = std::sqrt(shape) * scale;
  Vector out(count);
  for (Index i = 0; i < count; ++i) out(i) = (gamma(rng) - mean) / sd;
  return out;
}

Vector simulate_ar1(double delta, double phi, const Vector& innovations, int burn_in) {
  if (burn_in < 0 || innovations.size() < burn_in) {
    fail(ErrorKind::parameter, "innovation count is smaller than burn_in");
  }
  Vector out(innovations.size() - burn_in);
  double prev = 0.0;
  for (Index t = 0; t < innovations.size(); ++t) {
    prev = delta + phi * prev + innovations(t);
    if (t >= burn_in) out(t - burn_in) = prev;
  }
  return out;
}

Eigen::Matrix2d pooled_covariance(const Matrix& a, const Matrix& b) {
  const double n = static_cast<double>(a.size());
  const double ma = a.mean();
  const double mb = b.mean();
  const auto da = a.array() - ma;
  const auto db = b.array() - mb;
  Eigen::Matrix2d s;
  s(0, 0) = (da * da).sum() / n;
  s(1, 1) = (db * db).sum() / n;
  s(0, 1) = s(1, 0) = (da * db).sum() / n;
  return s;
}

std::pair<Matrix, Matrix> target_covariance(const Matrix& xi_raw, const Matrix& z_raw,
                                            const Eigen::Matrix2d& c, double tau_sq) {
  if (xi_raw.rows() != z_raw.rows() || xi_raw.cols() != z_raw.cols() || xi_raw.size() < 2) {
    fail(ErrorKind::parameter, "xi and z must have the same shape with at least 2 entries");
  }
  if (!(tau_sq > 0.0 && tau_sq <= 1.0)) fail(ErrorKind::parameter, "tau_sq must lie in (0, 1]");
  const double tau = std::sqrt(tau_sq);
  Eigen::Matrix2d target;
  target << tau_sq * c(0, 0), tau * c(1, 0), tau * c(1, 0), c(1, 1);

  const Eigen::Matrix2d ls =
      lower_factor(pooled_covariance(xi_raw, z_raw), ErrorKind::degeneracy, "pooled sample");
  const Eigen::Matrix2d lt = lower_factor(target, ErrorKind::parameter, "target");
  // out = Lt * Ls^{-1} * (d - mean) + mean, written out for the 2x2 case.
  const Eigen::Matrix2d map = lt * ls.triangularView<Eigen::Lower>().solve(
                                       Eigen::Matrix2d::Identity());
  const double mx = xi_raw.mean();
  const double mz = z_raw.mean();
  const auto dx = xi_raw.array() - mx;
  const auto dz = z_raw.array() - mz;
  Matrix xi = (map(0, 0) * dx + map(0, 1) * dz + mx).matrix();
  Matrix z = (map(1, 0) * dx + map(1, 1) * dz + mz).matrix();
  return {std::move(xi), std::move(z)};
}

SimulatedPanel generate_panel(const DgpConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  const Index n = cfg.n;
  const Index periods = cfg.periods;
  const Index len = periods + cfg.burn_in;
  Rng rng(derive_seed(cfg.seed, "dgp"), stream);

  const Vector v_xi = sample_std_gamma(cfg.shape_v_xi, cfg.scale, n * len, rng);
  const Vector v_z = sample_std_gamma(cfg.shape_v_z, cfg.scale, n * len, rng);
  const Vector e = sample_std_gamma(cfg.shape_e, cfg.scale, n * periods, rng);
  const Vector u = sample_std_gamma(cfg.shape_u, cfg.scale, n * periods, rng);

  Matrix xi_raw(n, periods), z_raw(n, periods);
  for (Index i = 0; i < n; ++i) {
    xi_raw.row(i) =
        simulate_ar1(cfg.delta_xi, cfg.phi_xi, v_xi.segment(i * len, len), cfg.burn_in);
    z_raw.row(i) = simulate_ar1(cfg.delta_z, cfg.phi_z, v_z.segment(i * len, len), cfg.burn_in);
  }

  // c11, c21, c22 describe the latent pair after targeting. target_covariance
  // scales its input by tau_sq and tau, so undo that here.
  const double tau = std::sqrt(cfg.tau_sq);
  Eigen::Matrix2d c;
  c << cfg.c11 / cfg.tau_sq, cfg.c21 / tau, cfg.c21 / tau, cfg.c22;
  auto [xi, z] = target_covariance(xi_raw, z_raw, c, cfg.tau_sq);

  SimulatedPanel out;
  out.first_year = cfg.first_year;
  const double noise_sd = std::sqrt((1.0 - cfg.tau_sq) / cfg.tau_sq * cfg.c11);
  out.x = xi + noise_sd * Eigen::Map<const Matrix>(e.data(), n, periods);

  Matrix signal = cfg.gamma * z;
  for (Index t = 0; t < periods; ++t) signal.col(t) += cfg.beta_at(static_cast<int>(t)) * xi.col(t);
  const double centered = signal.mean();
  const double var_signal =
      (signal.array() - centered).square().sum() / static_cast<double>(signal.size());
  if (!(cfg.sigma_y_sq > var_signal)) {
    fail(ErrorKind::calibration,
         "sigma_y_sq=" + text::format(cfg.sigma_y_sq) +
             " does not exceed var(xi*beta + z*gamma)=" + text::format(var_signal));
  }
  out.y = (cfg.mu_y + signal.array() +
           std::sqrt(cfg.sigma_y_sq - var_signal) *
               Eigen::Map<const Matrix>(u.data(), n, periods).array())
              .matrix();
  out.xi = std::move(xi);
  out.z = std::move(z);
  return out;
}

CrossSection generate_cross_section(const CrossSectionDgpConfig& cfg, Rng& rng) {
  if (cfg.n < 1) fail(ErrorKind::parameter, "n must be positive");
  auto draw = [&](ShockLaw law, double shape, Index count) -> Vector {
    if (law == ShockLaw::std_gamma) return sample_std_gamma(shape, 1.0, count, rng);
    std::normal_distribution<double> normal;
    Vector v(count);
    for (Index i = 0; i < count; ++i) v(i) = normal(rng);
    return v;
  };
  const Vector xi = draw(cfg.xi_law, cfg.xi_shape, cfg.n);
  const Vector u = draw(ShockLaw::normal, 1.0, cfg.n);
  const Vector eps = draw(cfg.eps_law, cfg.eps_shape, cfg.n);
  Vector x = xi + cfg.u_sd * u;
  Vector y = cfg.beta * xi + cfg.eps_sd * eps;
  return CrossSection(std::move(y), std::move(x));
}

}  // namespace eivdc
