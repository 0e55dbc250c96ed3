#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <sstream>

#include "eivdc/dgp.hpp"
#include "eivdc/errors.hpp"
#include "helpers.hpp"

using namespace eivdc;

namespace {

struct Moments {
  double mean, var, skew;
};

Moments moments(const Vector& v) {
  const double n = static_cast<double>(v.size());
  const double m = v.mean();
  const Vector d = v.array() - m;
  const double m2 = d.squaredNorm() / n;
  const double m3 = d.array().cube().sum() / n;
  return {m, m2, m3 / std::pow(m2, 1.5)};
}

double pooled_var(const Matrix& a) {
  const double m = a.mean();
  return (a.array() - m).square().mean();
}

double pooled_cov(const Matrix& a, const Matrix& b) {
  return ((a.array() - a.mean()) * (b.array() - b.mean())).mean();
}

DgpConfig small_config(std::uint64_t seed) {
  DgpConfig cfg;
  cfg.n = 200;
  cfg.periods = 5;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("standardized gamma has zero mean and unit variance", "[dgp]") {
  Rng rng(1);
  const Moments m = moments(sample_std_gamma(0.32, 1.0, 1'000'000, rng));
  CHECK(std::abs(m.mean) < 4e-3);
  CHECK(std::abs(m.var - 1.0) < 1e-2);
}

TEST_CASE("standardized exponential has skewness two", "[dgp]") {
  Rng rng(2);
  const Moments m = moments(sample_std_gamma(1.0, 1.0, 1'000'000, rng));
  CHECK(std::abs(m.skew - 2.0) < 0.05);
}

TEST_CASE("scale does not change the standardized law", "[dgp]") {
  Rng a(3), b(3);
  const Vector u = sample_std_gamma(2.0, 1.0, 1000, a);
  const Vector v = sample_std_gamma(2.0, 3.0, 1000, b);
  // Same uniforms, so only the rounding of the scaling can differ.
  CHECK((u - v).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("gamma shape and scale must be positive", "[dgp]") {
  Rng rng(1);
  CHECK_THROWS_AS(sample_std_gamma(0.0, 1.0, 10, rng), Error);
  CHECK_THROWS_AS(sample_std_gamma(1.0, -1.0, 10, rng), Error);
  try {
    sample_std_gamma(0.0, 1.0, 10, rng);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parameter);
  }
}

TEST_CASE("latent innovations are right-skewed", "[dgp]") {
  Rng rng(4);
  CHECK(moments(sample_std_gamma(0.007, 1.0, 200'000, rng)).skew > 0.0);
  CHECK(moments(sample_std_gamma(2.08, 1.0, 200'000, rng)).skew > 0.0);
}

TEST_CASE("ar1 with phi=0 and delta=0 returns the last innovations", "[dgp]") {
  const Vector innov = Vector::LinSpaced(13, 1.0, 13.0);
  const Vector out = simulate_ar1(0.0, 0.0, innov, 10);
  CHECK(out == innov.tail(3));
}

TEST_CASE("ar1 converges geometrically to delta over one minus phi", "[dgp]") {
  const Vector out = simulate_ar1(1.0, 0.5, Vector::Zero(15), 10);
  REQUIRE(out.size() == 5);
  for (Index t = 0; t < out.size(); ++t) {
    // x_k = 2 (1 - 0.5^k) after k steps from 0
    const double k = static_cast<double>(t + 11);
    CHECK(out(t) == Catch::Approx(2.0 * (1.0 - std::pow(0.5, k))).margin(1e-15));
    CHECK(std::abs(out(t) - 2.0) < 2e-3);
  }
  const Vector far = simulate_ar1(0.570, 0.78, Vector::Zero(210), 200);
  CHECK((far.array() - 0.570 / 0.22).abs().maxCoeff() < 1e-12);
}

TEST_CASE("ar1 rejects a length mismatch", "[dgp]") {
  CHECK_THROWS_AS(simulate_ar1(0.0, 0.5, Vector::Zero(5), 10), Error);
}

TEST_CASE("covariance targeting hits the rescaled target exactly", "[dgp]") {
  Rng rng(5);
  Matrix xi(50, 8), z(50, 8);
  for (Index i = 0; i < xi.size(); ++i) {
    xi(i) = rng.uniform() * 3.0 + 1.0;
    z(i) = rng.uniform() + 0.3 * xi(i);
  }
  Eigen::Matrix2d c;
  c << 16.130, 0.489, 0.489, 0.258;
  const auto [xo, zo] = target_covariance(xi, z, c, 0.45);
  const Eigen::Matrix2d got = pooled_covariance(xo, zo);
  CHECK(testing::rel_err(got(0, 0), 0.45 * 16.130) < 1e-10);
  CHECK(testing::rel_err(got(0, 1), std::sqrt(0.45) * 0.489) < 1e-10);
  CHECK(testing::rel_err(got(1, 1), 0.258) < 1e-10);
  CHECK(std::abs(xo.mean() - xi.mean()) < 1e-12);
  CHECK(std::abs(zo.mean() - z.mean()) < 1e-12);
}

TEST_CASE("covariance targeting is idempotent", "[dgp]") {
  Rng rng(6);
  Matrix xi(30, 4), z(30, 4);
  for (Index i = 0; i < xi.size(); ++i) {
    xi(i) = rng.uniform();
    z(i) = rng.uniform();
  }
  Eigen::Matrix2d c;
  c << 2.0, 0.3, 0.3, 1.0;
  const auto [x1, z1] = target_covariance(xi, z, c, 0.5);
  const auto [x2, z2] = target_covariance(x1, z1, c, 0.5);
  CHECK((x2 - x1).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((z2 - z1).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("covariance targeting rejects collinear inputs", "[dgp]") {
  Rng rng(7);
  Matrix xi(10, 3);
  for (Index i = 0; i < xi.size(); ++i) xi(i) = rng.uniform();
  Eigen::Matrix2d c = Eigen::Matrix2d::Identity();
  try {
    target_covariance(xi, xi, c, 0.45);
    FAIL("expected degeneracy");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degeneracy);
  }
}

TEST_CASE("generate_panel is deterministic per seed and stream", "[dgp]") {
  const DgpConfig cfg = small_config(9);
  const SimulatedPanel a = generate_panel(cfg, 3);
  const SimulatedPanel b = generate_panel(cfg, 3);
  const SimulatedPanel c = generate_panel(cfg, 4);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.x != c.x);
  CHECK(a.xi.rows() == 200);
  CHECK(a.xi.cols() == 5);
}

TEST_CASE("generated latent pair matches the configured covariance", "[dgp]") {
  const DgpConfig cfg = small_config(10);
  const SimulatedPanel p = generate_panel(cfg);
  CHECK(testing::rel_err(pooled_var(p.xi), cfg.c11) < 1e-10);
  CHECK(testing::rel_err(pooled_cov(p.xi, p.z), cfg.c21) < 1e-10);
  CHECK(testing::rel_err(pooled_var(p.z), cfg.c22) < 1e-10);
}

TEST_CASE("outcome matches the target mean and variance", "[dgp]") {
  DgpConfig cfg = small_config(11);
  cfg.n = 2000;
  const SimulatedPanel p = generate_panel(cfg);
  // Noise has unit variance only in population, so allow sampling error.
  CHECK(std::abs(pooled_var(p.y) - cfg.sigma_y_sq) < 0.05 * cfg.sigma_y_sq);
  CHECK(std::abs(p.y.mean() - cfg.mu_y - (cfg.beta * p.xi.mean() + cfg.gamma * p.z.mean())) <
        0.01);
}

TEST_CASE("measurement noise attenuates by tau squared", "[dgp]") {
  DgpConfig cfg = small_config(12);
  cfg.n = 3000;
  cfg.periods = 20;
  const SimulatedPanel p = generate_panel(cfg);
  CHECK(std::abs(pooled_var(p.xi) / pooled_var(p.x) - cfg.tau_sq) < 0.02);
}

TEST_CASE("beta=0 and gamma=0 collapse the outcome to noise", "[dgp]") {
  DgpConfig cfg = small_config(13);
  cfg.n = 2000;
  cfg.beta = 0.0;
  cfg.gamma = 0.0;
  const SimulatedPanel p = generate_panel(cfg);
  const double nobs = static_cast<double>(p.y.size());
  // Standardized gamma noise: var(y) has sampling sd sqrt((kurt - 1)/N) sigma^2
  // with excess kurtosis 6/shape.
  const double kurt = 3.0 + 6.0 / cfg.shape_u;
  const double se_var = std::sqrt((kurt - 1.0) / nobs) * cfg.sigma_y_sq;
  CHECK(std::abs(pooled_var(p.y) - cfg.sigma_y_sq) < 3.0 * se_var);
  const double se_cov = std::sqrt(pooled_var(p.x) * cfg.sigma_y_sq / nobs);
  // x is autocorrelated within firm; widen by the AR(1) long-run factor.
  const double ar = std::sqrt((1.0 + cfg.phi_xi) / (1.0 - cfg.phi_xi));
  CHECK(std::abs(pooled_cov(p.x, p.y)) < 3.0 * se_cov * ar);
}

TEST_CASE("too small sigma_y is a calibration error naming both values", "[dgp]") {
  DgpConfig cfg = small_config(14);
  cfg.sigma_y_sq = 0.01;
  try {
    generate_panel(cfg);
    FAIL("expected calibration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::calibration);
    const std::string msg = e.what();
    CHECK(msg.find("sigma_y_sq=0.01 ") != std::string::npos);
    CHECK(msg.find("var") != std::string::npos);
  }
}

TEST_CASE("config validation", "[dgp]") {
  DgpConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  auto bad = [](auto mutate) {
    DgpConfig c;
    mutate(c);
    try {
      c.validate();
    } catch (const Error& e) {
      return e.kind() == ErrorKind::parameter;
    }
    return false;
  };
  CHECK(bad([](DgpConfig& c) { c.tau_sq = 0.0; }));
  CHECK(bad([](DgpConfig& c) { c.tau_sq = 1.5; }));
  CHECK(bad([](DgpConfig& c) { c.phi_xi = 1.0; }));
  CHECK(bad([](DgpConfig& c) { c.phi_z = -1.2; }));
  CHECK(bad([](DgpConfig& c) { c.shape_u = 0.0; }));
  CHECK(bad([](DgpConfig& c) { c.scale = -1.0; }));
  CHECK(bad([](DgpConfig& c) { c.sigma_y_sq = 0.0; }));
  CHECK(bad([](DgpConfig& c) { c.c21 = 10.0; }));
  CHECK(bad([](DgpConfig& c) { c.burn_in = -1; }));
  CHECK(bad([](DgpConfig& c) { c.beta_by_period = {0.0}; }));
}

TEST_CASE("config text round-trips", "[dgp]") {
  DgpConfig cfg;
  cfg.n = 123;
  cfg.beta = 0.0;
  cfg.tau_sq = 0.6;
  cfg.seed = 77;
  std::ostringstream out;
  cfg.write(out);
  std::istringstream in("# comment\n\n" + out.str());
  DgpConfig back;
  read_dgp_config(in, back);
  CHECK(back.n == 123);
  CHECK(back.beta == 0.0);
  CHECK(back.tau_sq == 0.6);
  CHECK(back.seed == 77);
  std::istringstream unknown("nonsense=1\n");
  CHECK_THROWS_AS(read_dgp_config(unknown, back), Error);
}

TEST_CASE("generate_panel stays finite over a shape sweep", "[dgp]") {
  Rng gen(15);
  for (int trial = 0; trial < 25; ++trial) {
    DgpConfig cfg;
    cfg.n = 40;
    cfg.periods = 4;
    cfg.seed = gen();
    auto shape = [&] { return 0.005 * std::pow(1000.0, gen.uniform()); };
    cfg.shape_u = shape();
    cfg.shape_e = shape();
    cfg.shape_v_xi = shape();
    cfg.shape_v_z = shape();
    cfg.sigma_y_sq = 1.0;
    INFO("shapes " << cfg.shape_u << ' ' << cfg.shape_e << ' ' << cfg.shape_v_xi << ' '
                   << cfg.shape_v_z);
    const SimulatedPanel p = generate_panel(cfg);
    CHECK(p.x.allFinite());
    CHECK(p.y.allFinite());
    CHECK(p.xi.allFinite());
    CHECK(p.z.allFinite());
  }
}

TEST_CASE("to_panel is firm-major with a z control", "[dgp]") {
  DgpConfig cfg = small_config(16);
  cfg.n = 3;
  cfg.periods = 2;
  cfg.first_year = 1990;
  cfg.sigma_y_sq = 10.0;
  const SimulatedPanel s = generate_panel(cfg);
  const PanelData p = s.to_panel();
  REQUIRE(p.size() == 6);
  CHECK(p.firm() == std::vector<std::int64_t>{0, 0, 1, 1, 2, 2});
  CHECK(p.year() == std::vector<int>{1990, 1991, 1990, 1991, 1990, 1991});
  CHECK(p.x()(3) == s.x(1, 1));
  CHECK(p.control_names() == std::vector<std::string>{"z"});
}

TEST_CASE("per-period beta overrides the scalar slope", "[dgp]") {
  DgpConfig cfg = small_config(17);
  cfg.n = 2000;
  cfg.periods = 2;
  cfg.beta_by_period = {0.0, 0.03};
  cfg.gamma = 0.0;
  const SimulatedPanel p = generate_panel(cfg);
  // Latent slope of y on xi per period.
  for (int t = 0; t < 2; ++t) {
    const Vector xi = p.xi.col(t), y = p.y.col(t);
    const double slope = ((xi.array() - xi.mean()) * (y.array() - y.mean())).sum() /
                         (xi.array() - xi.mean()).square().sum();
    CHECK(std::abs(slope - cfg.beta_by_period[static_cast<std::size_t>(t)]) < 0.005);
  }
}

TEST_CASE("cross-section dgp has the stated shape", "[dgp]") {
  CrossSectionDgpConfig cfg;
  cfg.n = 100;
  Rng rng(18);
  const CrossSection cs = generate_cross_section(cfg, rng);
  CHECK(cs.size() == 100);
  CHECK(cs.num_controls() == 0);
  CHECK(cs.x().allFinite());
}
