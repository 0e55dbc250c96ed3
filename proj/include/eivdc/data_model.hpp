#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "eivdc/rng.hpp"

namespace eivdc {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One set of observations (y_i, x_i, z_i) for the cross-sectional
/// estimators. z is n x k and may be empty (k = 0).
///
/// Invariants, checked on construction:
///  - y, x and the rows of z have the same length n >= 1;
///  - every value is finite;
///  - when k > 0, z has full column rank.
class CrossSection {
 public:
  CrossSection(Vector y, Vector x, Matrix z = Matrix(),
               std::vector<std::string> control_names = {});

  Index size() const noexcept { return y_.size(); }
  Index num_controls() const noexcept { return z_.cols(); }

  const Vector& y() const noexcept { return y_; }
  const Vector& x() const noexcept { return x_; }
  const Matrix& z() const noexcept { return z_; }
  const std::vector<std::string>& control_names() const noexcept {
    return control_names_;
  }

  /// Rows `rows` in the given order.
  CrossSection subset(std::span<const Index> rows) const;

  /// Copy with a trailing all-ones column named "const".
  CrossSection with_intercept() const;

 private:
  Vector y_;
  Vector x_;
  Matrix z_;
  std::vector<std::string> control_names_;
};

/// Firm-year panel, possibly unbalanced.
///
/// Firms are dense integers 0..F-1; `firm_labels()[f]` holds the identifier
/// as it appeared in the source. Rows keep their input order.
class PanelData {
 public:
  struct Options {
    /// Enforce that every firm is observed in at least two distinct years.
    bool require_multi_year = true;
  };

  PanelData(std::vector<std::int64_t> firm, std::vector<int> year, Vector y,
            Vector x, Matrix z, std::vector<std::string> control_names = {},
            std::vector<std::string> firm_labels = {});
  PanelData(std::vector<std::int64_t> firm, std::vector<int> year, Vector y,
            Vector x, Matrix z, std::vector<std::string> control_names,
            std::vector<std::string> firm_labels, Options options);

  Index size() const noexcept { return y_.size(); }
  Index num_controls() const noexcept { return z_.cols(); }
  std::size_t num_firms() const noexcept { return firm_labels_.size(); }

  const std::vector<std::int64_t>& firm() const noexcept { return firm_; }
  const std::vector<int>& year() const noexcept { return year_; }
  const Vector& y() const noexcept { return y_; }
  const Vector& x() const noexcept { return x_; }
  const Matrix& z() const noexcept { return z_; }
  const std::vector<std::string>& control_names() const noexcept {
    return control_names_;
  }
  const std::vector<std::string>& firm_labels() const noexcept {
    return firm_labels_;
  }

  /// Distinct years, ascending.
  std::vector<int> years() const;

  /// Row indices of `year`, ordered by firm id. Empty when absent.
  std::vector<Index> rows_in_year(int year) const;

  /// Same panel with new variable values (used by the panel transforms).
  PanelData with_values(Vector y, Vector x, Matrix z) const;

 private:
  std::vector<std::int64_t> firm_;
  std::vector<int> year_;
  Vector y_;
  Vector x_;
  Matrix z_;
  std::vector<std::string> control_names_;
  std::vector<std::string> firm_labels_;
  bool multi_year_ = true;
};

/// Column mapping for CSV ingestion.
struct CsvSchema {
  std::string firm = "firm";
  std::string year = "year";
  std::string y = "y";
  std::string x = "x";
  std::vector<std::string> z;
};

struct LoadResult {
  PanelData panel;
  std::size_t dropped_firms = 0;
  std::size_t dropped_rows = 0;
};

/// Reads an RFC-4180 style CSV with a header row. Firms observed in a single
/// year are dropped and counted.
LoadResult load_panel_csv(const std::filesystem::path& path, const CsvSchema& schema);
LoadResult read_panel_csv(std::istream& in, const CsvSchema& schema);

/// Writes the panel with the schema's column names; doubles use 17
/// significant digits so a reload is bit-identical.
void write_panel_csv(std::ostream& out, const PanelData& panel, const CsvSchema& schema);
void write_panel_csv(const std::filesystem::path& path, const PanelData& panel,
                     const CsvSchema& schema);

/// Drops firms with fewer than two distinct years. Row order is kept and
/// firm ids are re-densified.
LoadResult drop_single_year_firms(std::vector<std::int64_t> firm, std::vector<int> year,
                                  Vector y, Vector x, Matrix z,
                                  std::vector<std::string> control_names,
                                  std::vector<std::string> firm_labels);

/// Rows with first <= year <= last, with the single-year filter re-applied.
LoadResult restrict_years(const PanelData& panel, int first, int last);

/// Cross-section for `year` in firm order. Throws not_found for an absent
/// year.
CrossSection cross_section_at(const PanelData& panel, int year);

/// Indices kept when n rows are reduced to m * floor(n / m): a uniformly
/// chosen subset, returned in ascending order.
std::vector<Index> discard_to_multiple_rows(Index n, int m, Rng& rng);

CrossSection discard_to_multiple(const CrossSection& cs, int m, Rng& rng);

}  // namespace eivdc
