#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eivdc/data_model.hpp"
#include "eivdc/dc.hpp"
#include "eivdc/dgp.hpp"
#include "eivdc/inference.hpp"

namespace eivdc {

enum class Method { ols, three_m, dc };

std::string_view to_string(Method method) noexcept;
/// Accepts "ols", "3m" and "dc" (case-insensitive).
Method parse_method(std::string_view text);

struct EstimateOptions {
  Method method = Method::dc;
  int blocks_per_year = 1;
  bool fe = false;
  bool te = false;
  double alpha = 0.05;
  int bootstrap_draws = 399;
  PartitionMode partition_mode = PartitionMode::random;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
};

struct EstimateReport {
  Method method = Method::dc;
  EstimateOptions options;
  double beta_hat = 0.0;
  std::vector<std::string> gamma_names;
  std::vector<double> gamma_hat;
  ConfidenceInterval ci_beta;
  std::vector<ConfidenceInterval> ci_gamma;
  /// DC only: subsample ratios in (year, block) order.
  std::vector<double> subsample_estimates;
  std::size_t degenerate_blocks = 0;
  std::size_t discarded_rows = 0;
  std::size_t observations = 0;
  std::size_t firms = 0;
  std::size_t years = 0;
  /// DC only: total blocks over rows per block, averaged over years.
  double blocks_over_block_size = 0.0;
  std::vector<std::string> warnings;
};

/// Runs one method on a panel. Sub-seeds: derive_seed(seed, "partition") for
/// the DC partitions and derive_seed(seed, "bootstrap") for the resampling.
EstimateReport estimate_panel(const PanelData& panel, const EstimateOptions& options);

/// JSON document for a report (see schemas/estimate_report.schema.json).
std::string report_json(const EstimateReport& report);

/// One estimator entry of a Monte Carlo design.
struct MethodSpec {
  Method method = Method::ols;
  int blocks_per_year = 1;

  /// "OLS", "3M" or "DC(B*T)".
  std::string label(int periods) const;
};

/// Model specification: 1 intercept, 2 fixed effects, 3 time effects,
/// 4 both.
struct ModelSpec {
  bool fe = false;
  bool te = false;

  int number() const noexcept { return 1 + (fe ? 1 : 0) + (te ? 2 : 0); }
  static ModelSpec from_number(int number);
};

struct McConfig {
  DgpConfig dgp;
  int reps = 500;
  std::vector<MethodSpec> methods;
  std::vector<ModelSpec> specs;
  double alpha = 0.05;
  int bootstrap_draws = 399;
  PartitionMode partition_mode = PartitionMode::random;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  void validate() const;
};

/// Aggregate over replications for one (method, spec, coefficient).
struct McCell {
  std::string method;
  int spec = 1;
  std::string coef;  // "beta" or "gamma"
  double truth = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double coverage = 0.0;
  std::size_t reps = 0;
  std::size_t failures = 0;
  std::size_t degenerate_blocks = 0;
};

struct McSummary {
  McConfig config;
  std::vector<McCell> cells;
  /// Per-replication estimates, cell-major, for diagnostics. Failed
  /// replications hold NaN.
  std::vector<std::vector<double>> estimates;
  double seconds = 0.0;

  const McCell* find(std::string_view method, int spec, std::string_view coef) const;
};

/// Runs the design. Replication r simulates generate_panel(dgp, r) with
/// dgp.seed = derive_seed(seed, "mc"); results do not depend on `threads`.
/// A calibration error aborts with the replication index.
McSummary run_mc(const McConfig& config);

/// Table-shaped outputs. Column order: method, spec, coef, truth, mean, sd,
/// coverage, reps, failures, degenerate_blocks.
void write_summary_csv(std::ostream& out, const McSummary& summary);
void write_summary_text(std::ostream& out, const McSummary& summary);
std::string summary_json(const McSummary& summary);

/// Reference cells of the full-size design (n=3000, T=20, 20,000 draws) for
/// comparison in paper-scale mode.
struct ReferenceCell {
  std::string_view method;
  int spec;
  std::string_view coef;
  double beta0;
  double mean;
  double sd;
  double coverage;
};
std::span<const ReferenceCell> reference_cells();

struct WindowRow {
  int end_year = 0;
  std::string method;
  std::string coef;
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct WindowResult {
  int start_year = 0;
  std::vector<WindowRow> rows;
};

/// Re-estimates on [first year, end] for end = first_end .. last year, with
/// the single-year filter re-applied per window. Every window uses
/// `options.seed`. `options.method` is ignored in favour of `methods`.
WindowResult expanding_window(const PanelData& panel, int first_end,
                              const std::vector<Method>& methods,
                              const EstimateOptions& options);

/// Tidy CSV: end_year, method, coef, estimate, lo, hi.
void write_window_csv(std::ostream& out, const WindowResult& result);

}  // namespace eivdc
