#include "eivdc/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <cctype>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "eivdc/errors.hpp"

namespace eivdc {
namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

void check_full_rank(const Matrix& z, const std::string& what) {
  if (z.cols() == 0) return;
  if (z.rows() < z.cols()) {
    fail(ErrorKind::singular_design,
         what + ": " + std::to_string(z.rows()) + " rows for " +
             std::to_string(z.cols()) + " controls");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(z);
  if (qr.rank() < z.cols()) {
    fail(ErrorKind::singular_design,
         what + ": control matrix has rank " + std::to_string(qr.rank()) + " < " +
             std::to_string(z.cols()));
  }
}

std::vector<std::string> default_names(Index k) {
  std::vector<std::string> names;
  for (Index j = 0; j < k; ++j) names.push_back("z" + std::to_string(j + 1));
  return names;
}

// Splits one CSV record. Handles quoted fields with doubled quotes; a quoted
// field may not span lines.
std::vector<std::string> split_record(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty() && !was_quoted) {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) {
    fail(ErrorKind::parse, "line " + std::to_string(line_no) + ": unterminated quoted field");
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_double(const std::string& text, std::size_t row, const std::string& column) {
  const std::string t = trim(text);
  double value = 0.0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (!t.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (t.empty() || ec != std::errc() || ptr != end) {
    fail(ErrorKind::parse, "row " + std::to_string(row) + ", column '" + column +
                               "': not a number: '" + text + "'");
  }
  if (!std::isfinite(value)) {
    fail(ErrorKind::parse, "row " + std::to_string(row) + ", column '" + column +
                               "': non-finite value");
  }
  return value;
}

int parse_int(const std::string& text, std::size_t row, const std::string& column) {
  const std::string t = trim(text);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    fail(ErrorKind::parse, "row " + std::to_string(row) + ", column '" + column +
                               "': not an integer: '" + text + "'");
  }
  return value;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

// ---------------------------------------------------------------------------
// CrossSection

CrossSection::CrossSection(Vector y, Vector x, Matrix z,
                           std::vector<std::string> control_names)
    : y_(std::move(y)), x_(std::move(x)), z_(std::move(z)),
      control_names_(std::move(control_names)) {
  const Index n = y_.size();
  if (n < 1) fail(ErrorKind::insufficient_data, "cross-section needs at least one row");
  if (z_.size() == 0) z_.resize(n, 0);
  if (x_.size() != n || z_.rows() != n) {
    fail(ErrorKind::data, "cross-section columns have different lengths");
  }
  if (!all_finite(y_) || !all_finite(x_) || !z_.allFinite()) {
    fail(ErrorKind::data, "cross-section contains non-finite values");
  }
  if (control_names_.empty()) control_names_ = default_names(z_.cols());
  if (static_cast<Index>(control_names_.size()) != z_.cols()) {
    fail(ErrorKind::parameter, "control name count does not match control columns");
  }
  check_full_rank(z_, "cross-section");
}

CrossSection CrossSection::subset(std::span<const Index> rows) const {
  const auto m = static_cast<Index>(rows.size());
  Vector y(m), x(m);
  Matrix z(m, z_.cols());
  for (Index r = 0; r < m; ++r) {
    const Index i = rows[static_cast<std::size_t>(r)];
    y(r) = y_(i);
    x(r) = x_(i);
    z.row(r) = z_.row(i);
  }
  return CrossSection(std::move(y), std::move(x), std::move(z), control_names_);
}

CrossSection CrossSection::with_intercept() const {
  Matrix z(size(), z_.cols() + 1);
  z.leftCols(z_.cols()) = z_;
  z.col(z_.cols()).setOnes();
  auto names = control_names_;
  names.emplace_back("const");
  return CrossSection(y_, x_, std::move(z), std::move(names));
}

// ---------------------------------------------------------------------------
// PanelData

PanelData::PanelData(std::vector<std::int64_t> firm, std::vector<int> year, Vector y,
                     Vector x, Matrix z, std::vector<std::string> control_names,
                     std::vector<std::string> firm_labels)
    : PanelData(std::move(firm), std::move(year), std::move(y), std::move(x), std::move(z),
                std::move(control_names), std::move(firm_labels), Options{}) {}

PanelData::PanelData(std::vector<std::int64_t> firm, std::vector<int> year, Vector y,
                     Vector x, Matrix z, std::vector<std::string> control_names,
                     std::vector<std::string> firm_labels, Options options)
    : firm_(std::move(firm)), year_(std::move(year)), y_(std::move(y)), x_(std::move(x)),
      z_(std::move(z)), control_names_(std::move(control_names)),
      firm_labels_(std::move(firm_labels)), multi_year_(options.require_multi_year) {
  const Index n = y_.size();
  if (z_.size() == 0) z_.resize(n, 0);
  if (static_cast<Index>(firm_.size()) != n || static_cast<Index>(year_.size()) != n ||
      x_.size() != n || z_.rows() != n) {
    fail(ErrorKind::data, "panel columns have different lengths");
  }
  if (!all_finite(y_) || !all_finite(x_) || !z_.allFinite()) {
    fail(ErrorKind::data, "panel contains non-finite values");
  }
  if (control_names_.empty()) control_names_ = default_names(z_.cols());
  if (static_cast<Index>(control_names_.size()) != z_.cols()) {
    fail(ErrorKind::parameter, "control name count does not match control columns");
  }

  std::int64_t max_firm = -1;
  for (const auto f : firm_) {
    if (f < 0) fail(ErrorKind::data, "negative firm id");
    max_firm = std::max(max_firm, f);
  }
  if (firm_labels_.empty()) {
    for (std::int64_t f = 0; f <= max_firm; ++f) firm_labels_.push_back(std::to_string(f));
  }
  if (static_cast<std::int64_t>(firm_labels_.size()) <= max_firm) {
    fail(ErrorKind::parameter, "firm id without a label");
  }

  std::map<std::pair<std::int64_t, int>, Index> seen;
  for (Index i = 0; i < n; ++i) {
    const auto key = std::make_pair(firm_[static_cast<std::size_t>(i)],
                                    year_[static_cast<std::size_t>(i)]);
    const auto [it, inserted] = seen.emplace(key, i);
    if (!inserted) {
      fail(ErrorKind::data,
           "duplicate (firm=" + firm_labels_[static_cast<std::size_t>(key.first)] +
               ", year=" + std::to_string(key.second) + ") at rows " +
               std::to_string(it->second + 1) + " and " + std::to_string(i + 1));
    }
  }

  if (multi_year_) {
    std::vector<int> count(firm_labels_.size(), 0);
    for (const auto f : firm_) ++count[static_cast<std::size_t>(f)];
    for (std::size_t f = 0; f < count.size(); ++f) {
      if (count[f] == 1) {
        fail(ErrorKind::data, "firm " + firm_labels_[f] + " is observed in a single year");
      }
    }
  }
}

std::vector<int> PanelData::years() const {
  std::vector<int> ys = year_;
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  return ys;
}

std::vector<Index> PanelData::rows_in_year(int year) const {
  std::vector<Index> rows;
  for (Index i = 0; i < size(); ++i) {
    if (year_[static_cast<std::size_t>(i)] == year) rows.push_back(i);
  }
  std::stable_sort(rows.begin(), rows.end(), [this](Index a, Index b) {
    return firm_[static_cast<std::size_t>(a)] < firm_[static_cast<std::size_t>(b)];
  });
  return rows;
}

PanelData PanelData::with_values(Vector y, Vector x, Matrix z) const {
  return PanelData(firm_, year_, std::move(y), std::move(x), std::move(z), control_names_,
                   firm_labels_, Options{multi_year_});
}

// ---------------------------------------------------------------------------
// Ingestion

LoadResult drop_single_year_firms(std::vector<std::int64_t> firm, std::vector<int> year,
                                  Vector y, Vector x, Matrix z,
                                  std::vector<std::string> control_names,
                                  std::vector<std::string> firm_labels) {
  const Index n = y.size();
  if (z.size() == 0) z.resize(n, 0);
  std::unordered_map<std::int64_t, std::vector<int>> years_of;
  for (Index i = 0; i < n; ++i) {
    years_of[firm[static_cast<std::size_t>(i)]].push_back(year[static_cast<std::size_t>(i)]);
  }
  std::unordered_map<std::int64_t, bool> keep_firm;
  std::size_t dropped_firms = 0;
  for (auto& [f, ys] : years_of) {
    std::sort(ys.begin(), ys.end());
    const bool keep = std::adjacent_find(ys.begin(), ys.end(), std::not_equal_to<>()) != ys.end();
    keep_firm[f] = keep;
    if (!keep) ++dropped_firms;
  }

  std::vector<Index> rows;
  for (Index i = 0; i < n; ++i) {
    if (keep_firm[firm[static_cast<std::size_t>(i)]]) rows.push_back(i);
  }

  // Re-densify firm ids, keeping the relative order of the original ids so
  // per-year cross-sections keep their row order.
  std::vector<std::int64_t> kept_ids;
  for (const auto& [f, keep] : keep_firm) {
    if (keep) kept_ids.push_back(f);
  }
  std::sort(kept_ids.begin(), kept_ids.end());
  std::unordered_map<std::int64_t, std::int64_t> remap;
  std::vector<std::string> labels;
  for (const auto f : kept_ids) {
    remap.emplace(f, static_cast<std::int64_t>(labels.size()));
    labels.push_back(firm_labels.empty() ? std::to_string(f)
                                         : firm_labels[static_cast<std::size_t>(f)]);
  }
  std::vector<std::int64_t> new_firm;
  std::vector<int> new_year;
  const auto m = static_cast<Index>(rows.size());
  Vector ny(m), nx(m);
  Matrix nz(m, z.cols());
  for (Index r = 0; r < m; ++r) {
    const Index i = rows[static_cast<std::size_t>(r)];
    new_firm.push_back(remap.at(firm[static_cast<std::size_t>(i)]));
    new_year.push_back(year[static_cast<std::size_t>(i)]);
    ny(r) = y(i);
    nx(r) = x(i);
    nz.row(r) = z.row(i);
  }
  if (m == 0) fail(ErrorKind::insufficient_data, "no firm is observed in two or more years");

  PanelData panel(std::move(new_firm), std::move(new_year), std::move(ny), std::move(nx),
                  std::move(nz), std::move(control_names), std::move(labels));
  return LoadResult{std::move(panel), dropped_firms,
                    static_cast<std::size_t>(n - m)};
}

LoadResult read_panel_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) fail(ErrorKind::schema, "empty CSV: header row required");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_record(line, line_no);
  for (auto& h : header) h = trim(h);

  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(ErrorKind::schema, "missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_firm = column(schema.firm);
  const std::size_t c_year = column(schema.year);
  const std::size_t c_y = column(schema.y);
  const std::size_t c_x = column(schema.x);
  std::vector<std::size_t> c_z;
  for (const auto& name : schema.z) c_z.push_back(column(name));

  std::unordered_map<std::string, std::int64_t> firm_ids;
  std::vector<std::string> labels;
  std::vector<std::int64_t> firm;
  std::vector<int> year;
  std::vector<double> ys, xs, zs;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_record(line, line_no);
    if (fields.size() != header.size()) {
      fail(ErrorKind::parse, "row " + std::to_string(row) + ": expected " +
                                 std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()));
    }
    const std::string label = trim(fields[c_firm]);
    if (label.empty()) {
      fail(ErrorKind::parse, "row " + std::to_string(row) + ", column '" + schema.firm +
                                 "': missing value");
    }
    auto [it, inserted] = firm_ids.emplace(label, static_cast<std::int64_t>(labels.size()));
    if (inserted) labels.push_back(label);
    firm.push_back(it->second);
    year.push_back(parse_int(fields[c_year], row, schema.year));
    ys.push_back(parse_double(fields[c_y], row, schema.y));
    xs.push_back(parse_double(fields[c_x], row, schema.x));
    for (std::size_t j = 0; j < c_z.size(); ++j) {
      zs.push_back(parse_double(fields[c_z[j]], row, schema.z[j]));
    }
  }

  const auto n = static_cast<Index>(ys.size());
  const auto k = static_cast<Index>(c_z.size());
  Vector y = Eigen::Map<const Vector>(ys.data(), n);
  Vector x = Eigen::Map<const Vector>(xs.data(), n);
  Matrix z(n, k);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < k; ++j) z(i, j) = zs[static_cast<std::size_t>(i * k + j)];
  }

  // Uniqueness is checked here, before the single-year filter, so the error
  // names the offending rows of the file.
  std::map<std::pair<std::int64_t, int>, Index> seen;
  for (Index i = 0; i < n; ++i) {
    const auto key = std::make_pair(firm[static_cast<std::size_t>(i)],
                                    year[static_cast<std::size_t>(i)]);
    const auto [it, inserted] = seen.emplace(key, i);
    if (!inserted) {
      fail(ErrorKind::data, "duplicate (firm=" + labels[static_cast<std::size_t>(key.first)] +
                                ", year=" + std::to_string(key.second) + ") at rows " +
                                std::to_string(it->second + 1) + " and " +
                                std::to_string(i + 1));
    }
  }

  return drop_single_year_firms(std::move(firm), std::move(year), std::move(y), std::move(x),
                                std::move(z), schema.z, std::move(labels));
}

LoadResult load_panel_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::not_found, "cannot open " + path.string());
  return read_panel_csv(in, schema);
}

void write_panel_csv(std::ostream& out, const PanelData& panel, const CsvSchema& schema) {
  if (static_cast<Index>(schema.z.size()) != panel.num_controls()) {
    fail(ErrorKind::schema, "schema names " + std::to_string(schema.z.size()) +
                                " controls but the panel has " +
                                std::to_string(panel.num_controls()));
  }
  out << quote_if_needed(schema.firm) << ',' << quote_if_needed(schema.year) << ','
      << quote_if_needed(schema.y) << ',' << quote_if_needed(schema.x);
  for (const auto& name : schema.z) out << ',' << quote_if_needed(name);
  out << '\n';
  for (Index i = 0; i < panel.size(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    out << quote_if_needed(panel.firm_labels()[static_cast<std::size_t>(panel.firm()[s])])
        << ',' << panel.year()[s] << ',' << format_double(panel.y()(i)) << ','
        << format_double(panel.x()(i));
    for (Index j = 0; j < panel.num_controls(); ++j) out << ',' << format_double(panel.z()(i, j));
    out << '\n';
  }
}

void write_panel_csv(const std::filesystem::path& path, const PanelData& panel,
                     const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::not_found, "cannot write " + path.string());
  write_panel_csv(out, panel, schema);
}

LoadResult restrict_years(const PanelData& panel, int first, int last) {
  std::vector<Index> rows;
  for (Index i = 0; i < panel.size(); ++i) {
    const int yr = panel.year()[static_cast<std::size_t>(i)];
    if (yr >= first && yr <= last) rows.push_back(i);
  }
  if (rows.empty()) {
    fail(ErrorKind::insufficient_data, "window " + std::to_string(first) + "-" +
                                           std::to_string(last) + " contains no data");
  }
  const auto m = static_cast<Index>(rows.size());
  std::vector<std::int64_t> firm;
  std::vector<int> year;
  Vector y(m), x(m);
  Matrix z(m, panel.num_controls());
  for (Index r = 0; r < m; ++r) {
    const Index i = rows[static_cast<std::size_t>(r)];
    firm.push_back(panel.firm()[static_cast<std::size_t>(i)]);
    year.push_back(panel.year()[static_cast<std::size_t>(i)]);
    y(r) = panel.y()(i);
    x(r) = panel.x()(i);
    z.row(r) = panel.z().row(i);
  }
  try {
    return drop_single_year_firms(std::move(firm), std::move(year), std::move(y), std::move(x),
                                  std::move(z), panel.control_names(), panel.firm_labels());
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::insufficient_data) throw;
    fail(ErrorKind::insufficient_data, "window " + std::to_string(first) + "-" +
                                           std::to_string(last) +
                                           " has no firm with two or more years");
  }
}

CrossSection cross_section_at(const PanelData& panel, int year) {
  const auto rows = panel.rows_in_year(year);
  if (rows.empty()) fail(ErrorKind::not_found, "year " + std::to_string(year) + " not in panel");
  const auto m = static_cast<Index>(rows.size());
  Vector y(m), x(m);
  Matrix z(m, panel.num_controls());
  for (Index r = 0; r < m; ++r) {
    const Index i = rows[static_cast<std::size_t>(r)];
    y(r) = panel.y()(i);
    x(r) = panel.x()(i);
    z.row(r) = panel.z().row(i);
  }
  return CrossSection(std::move(y), std::move(x), std::move(z), panel.control_names());
}

std::vector<Index> discard_to_multiple_rows(Index n, int m, Rng& rng) {
  if (m < 1) fail(ErrorKind::parameter, "multiple must be positive");
  if (n < m) {
    fail(ErrorKind::insufficient_data, std::to_string(n) + " rows cannot be reduced to a multiple of " +
                                           std::to_string(m));
  }
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  const Index keep = m * (n / m);
  if (keep == n) return rows;
  // Partial Fisher-Yates: the first n - keep positions become the discarded set.
  for (Index i = 0; i < n - keep; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<Index> kept(rows.begin() + (n - keep), rows.end());
  std::sort(kept.begin(), kept.end());
  return kept;
}

CrossSection discard_to_multiple(const CrossSection& cs, int m, Rng& rng) {
  const auto rows = discard_to_multiple_rows(cs.size(), m, rng);
  if (static_cast<Index>(rows.size()) == cs.size()) return cs;
  return cs.subset(rows);
}

}  // namespace eivdc
