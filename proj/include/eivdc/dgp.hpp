#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "eivdc/data_model.hpp"
#include "eivdc/rng.hpp"

namespace eivdc {

/// Calibrated panel simulation design.
///
/// c11, c21, c22 are the pooled covariance of the latent regressor and the
/// control after targeting. mu_y and sigma_y_sq are artifact defaults, not
/// estimates from any dataset.
struct DgpConfig {
  int n = 3000;
  int periods = 20;
  double beta = 0.025;
  double gamma = 0.05;
  double shape_u = 0.32;
  double shape_e = 0.09;
  double shape_v_xi = 0.007;
  double shape_v_z = 2.08;
  double scale = 1.0;
  double phi_xi = 0.78;
  double phi_z = 0.48;
  double delta_xi = 0.570;
  double delta_z = 0.094;
  double tau_sq = 0.45;
  double c11 = 16.130;
  double c21 = 0.489;
  double c22 = 0.258;
  double mu_y = 0.145;
  double sigma_y_sq = 0.0225;
  int burn_in = 10;
  std::uint64_t seed = 0;
  /// Year label of the first simulated period.
  int first_year = 1;
  /// Optional per-period slope overriding `beta` (length `periods`).
  std::vector<double> beta_by_period;

  /// Throws parameter error on an invalid configuration.
  void validate() const;

  double beta_at(int t) const {
    return beta_by_period.empty() ? beta : beta_by_period[static_cast<std::size_t>(t)];
  }

  /// Sets one field from its text form. Returns false for an unknown key.
  bool set(const std::string& key, const std::string& value);

  /// key=value lines, one per field.
  void write(std::ostream& out) const;
};

/// Reads key=value lines ('#' comments, blank lines ignored) into `cfg`.
/// Unknown keys are a parse error.
void read_dgp_config(std::istream& in, DgpConfig& cfg);

/// Simulated draws; each matrix is n x T (row = firm, column = period).
struct SimulatedPanel {
  Matrix xi;
  Matrix z;
  Matrix x;
  Matrix y;
  int first_year = 1;

  /// Long-format panel, firm-major row order, control column named "z".
  PanelData to_panel() const;
};

/// (g - shape*scale) / (sqrt(shape)*scale) for g ~ Gamma(shape, scale).
Vector sample_std_gamma(double shape, double scale, Index count, Rng& rng);

/// AR(1) started at 0; the first burn_in values are discarded.
Vector simulate_ar1(double delta, double phi, const Vector& innovations, int burn_in);

/// Affine recoloring of the pooled pair (xi, z) to the covariance
/// [[tau_sq*C11, tau*C21], [tau*C21, C22]] with tau = sqrt(tau_sq). Means are
/// kept. Covariances use the 1/N divisor.
std::pair<Matrix, Matrix> target_covariance(const Matrix& xi_raw, const Matrix& z_raw,
                                            const Eigen::Matrix2d& c, double tau_sq);

/// Pooled 1/N covariance of two equally sized matrices.
Eigen::Matrix2d pooled_covariance(const Matrix& a, const Matrix& b);

/// One replication. Randomness comes from Rng(derive_seed(cfg.seed, "dgp"),
/// stream), so replication r uses stream r.
SimulatedPanel generate_panel(const DgpConfig& cfg, std::uint64_t stream = 0);

/// Distribution of a shock in the cross-sectional design.
enum class ShockLaw { normal, std_gamma };

/// i.i.d. cross-section: x = xi + u, y = beta*xi + eps, no controls.
struct CrossSectionDgpConfig {
  Index n = 2000;
  double beta = 0.025;
  ShockLaw xi_law = ShockLaw::std_gamma;
  double xi_shape = 1.0;
  double u_sd = 1.0;
  ShockLaw eps_law = ShockLaw::std_gamma;
  double eps_shape = 0.5;
  double eps_sd = 0.025;
};

CrossSection generate_cross_section(const CrossSectionDgpConfig& cfg, Rng& rng);

}  // namespace eivdc
