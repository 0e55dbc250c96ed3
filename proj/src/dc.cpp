#include "eivdc/dc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "eivdc/errors.hpp"
#include "eivdc/numeric.hpp"
#include "eivdc/parallel.hpp"

namespace eivdc {
namespace {

// Subtracts group means in place. group[i] is a dense id in [0, groups).
void demean_groups(Vector& v, const std::vector<Index>& group, Index groups) {
  std::vector<CompensatedSum> sum(static_cast<std::size_t>(groups));
  std::vector<Index> count(static_cast<std::size_t>(groups), 0);
  for (Index i = 0; i < v.size(); ++i) {
    const auto g = static_cast<std::size_t>(group[static_cast<std::size_t>(i)]);
    sum[g] += v(i);
    ++count[g];
  }
  std::vector<double> mean(sum.size());
  for (std::size_t g = 0; g < sum.size(); ++g) {
    mean[g] = count[g] > 0 ? sum[g].value() / static_cast<double>(count[g]) : 0.0;
  }
  for (Index i = 0; i < v.size(); ++i) v(i) -= mean[static_cast<std::size_t>(group[static_cast<std::size_t>(i)])];
}

void demean_all(Vector& y, Vector& x, Matrix& z, const std::vector<Index>& group,
                Index groups) {
  demean_groups(y, group, groups);
  demean_groups(x, group, groups);
  for (Index j = 0; j < z.cols(); ++j) {
    Vector col = z.col(j);
    demean_groups(col, group, groups);
    z.col(j) = col;
  }
}

std::vector<Index> firm_groups(const PanelData& panel) {
  return std::vector<Index>(panel.firm().begin(), panel.firm().end());
}

std::pair<std::vector<Index>, Index> year_groups(const PanelData& panel) {
  const auto years = panel.years();
  std::vector<Index> group(panel.year().size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    group[i] = std::lower_bound(years.begin(), years.end(), panel.year()[i]) - years.begin();
  }
  return {std::move(group), static_cast<Index>(years.size())};
}

void demean_subset(Vector& v, std::span<const Index> rows) {
  CompensatedSum s;
  for (const Index i : rows) s += v(i);
  const double m = s.value() / static_cast<double>(rows.size());
  for (const Index i : rows) v(i) -= m;
}

double ratio(const Residualized& r) {
  CompensatedSum num, den;
  for (Index i = 0; i < r.x_dot.size(); ++i) num += r.x_dot(i) * r.y_dot(i) * r.y_dot(i);
  for (Index i = 0; i < r.x_ddot.size(); ++i) den += r.x_ddot(i) * r.x_ddot(i) * r.y_ddot(i);
  if (den.value() == 0.0) {
    fail(ErrorKind::degenerate_block, "subsample denominator is exactly zero");
  }
  return num.value() / den.value();
}

// Subsample values of one cross-section under a partition; nullopt marks a
// degenerate block.
std::vector<std::optional<double>> block_values(const CrossSection& cs,
                                                const BlockPartition& partition) {
  std::vector<std::optional<double>> out;
  out.reserve(partition.blocks.size());
  for (const auto& block : partition.blocks) {
    try {
      out.emplace_back(dc_subsample(cs, block.r1, block.r2));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate_block) throw;
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(PartitionMode mode) noexcept {
  return mode == PartitionMode::random ? "random" : "adjacent";
}

PartitionMode parse_partition_mode(std::string_view text) {
  if (text == "random") return PartitionMode::random;
  if (text == "adjacent") return PartitionMode::adjacent;
  fail(ErrorKind::parameter, "partition mode must be 'random' or 'adjacent'");
}

BlockPartition make_partition(Index n, int blocks, PartitionMode mode, Rng& rng) {
  if (blocks < 1) fail(ErrorKind::parameter, "number of blocks must be at least 1");
  if (blocks > n / 2) {
    fail(ErrorKind::too_many_blocks, std::to_string(blocks) + " blocks need at least " +
                                         std::to_string(2 * blocks) + " rows, have " +
                                         std::to_string(n));
  }
  if (n % (2 * blocks) != 0) {
    fail(ErrorKind::divisibility, std::to_string(n) + " rows are not divisible by 2*" +
                                      std::to_string(blocks));
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  if (mode == PartitionMode::random) std::shuffle(order.begin(), order.end(), rng);

  const auto half = static_cast<std::size_t>(n / (2 * blocks));
  BlockPartition out;
  out.mode = mode;
  out.blocks.resize(static_cast<std::size_t>(blocks));
  for (std::size_t j = 0; j < out.blocks.size(); ++j) {
    const auto first = order.begin() + static_cast<std::ptrdiff_t>(2 * j * half);
    out.blocks[j].r1.assign(first, first + static_cast<std::ptrdiff_t>(half));
    out.blocks[j].r2.assign(first + static_cast<std::ptrdiff_t>(half),
                            first + static_cast<std::ptrdiff_t>(2 * half));
  }
  return out;
}

double dc_subsample(const CrossSection& cs, std::span<const Index> r1,
                    std::span<const Index> r2) {
  return ratio(partial_out(cs, r1, r2));
}

DcResult dc_estimate(const CrossSection& cs, int blocks, PartitionMode mode, Rng& rng) {
  Rng local(rng(), 0);
  DcResult out;
  out.partition = make_partition(cs.size(), blocks, mode, local);
  const auto values = block_values(cs, out.partition);
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!values[j]) {
      ++out.subsamples.degenerate;
      continue;
    }
    out.subsamples.values.push_back(*values[j]);
    out.subsamples.year.push_back(0);
    out.subsamples.block.push_back(static_cast<int>(j));
  }
  if (out.subsamples.values.empty()) {
    fail(ErrorKind::degenerate_block, "every block has a zero denominator");
  }
  out.beta = median(out.subsamples.values);
  return out;
}

PanelData within_transform(const PanelData& panel) {
  Vector y = panel.y();
  Vector x = panel.x();
  Matrix z = panel.z();
  demean_all(y, x, z, firm_groups(panel), static_cast<Index>(panel.num_firms()));
  return panel.with_values(std::move(y), std::move(x), std::move(z));
}

CrossSection block_demean(const CrossSection& cs, const BlockPartition& partition) {
  Vector y = cs.y();
  Vector x = cs.x();
  Matrix z = cs.z();
  for (const auto& block : partition.blocks) {
    for (const auto* half : {&block.r1, &block.r2}) {
      demean_subset(y, *half);
      demean_subset(x, *half);
      for (Index j = 0; j < z.cols(); ++j) {
        Vector col = z.col(j);
        demean_subset(col, *half);
        z.col(j) = col;
      }
    }
  }
  return CrossSection(std::move(y), std::move(x), std::move(z), cs.control_names());
}

CrossSection pooled_design(const PanelData& panel, bool fe, bool te) {
  Vector y = panel.y();
  Vector x = panel.x();
  Matrix z = panel.z();
  const auto firms = firm_groups(panel);
  const auto num_firms = static_cast<Index>(panel.num_firms());
  const auto [years, num_years] = year_groups(panel);

  if (fe && te) {
    // Alternating projections converge to the two-way within transform; one
    // sweep is exact on balanced panels.
    const double scale = std::max({1.0, y.cwiseAbs().maxCoeff(), x.cwiseAbs().maxCoeff()});
    for (int iter = 0; iter < 10000; ++iter) {
      const Vector y0 = y;
      const Vector x0 = x;
      const Matrix z0 = z;
      demean_all(y, x, z, firms, num_firms);
      demean_all(y, x, z, years, num_years);
      double change = std::max((y - y0).cwiseAbs().maxCoeff(), (x - x0).cwiseAbs().maxCoeff());
      if (z.size() > 0) change = std::max(change, (z - z0).cwiseAbs().maxCoeff());
      if (change <= 1e-14 * scale) break;
    }
  } else if (fe) {
    demean_all(y, x, z, firms, num_firms);
  } else if (te) {
    demean_all(y, x, z, years, num_years);
  }

  CrossSection cs(std::move(y), std::move(x), std::move(z), panel.control_names());
  return (fe || te) ? cs : cs.with_intercept();
}

PanelDcResult panel_dc_estimate(const PanelData& panel, int blocks_per_year, bool fe, bool te,
                                PartitionMode mode, Rng& rng, unsigned threads) {
  if (blocks_per_year < 1) fail(ErrorKind::parameter, "blocks per year must be at least 1");
  const PanelData work = fe ? within_transform(panel) : panel;
  const std::uint64_t key = rng();
  const auto years = work.years();
  const int multiple = 2 * blocks_per_year;

  struct YearResult {
    std::vector<std::optional<double>> values;
    std::size_t discarded = 0;
  };
  std::vector<YearResult> per_year(years.size());

  parallel_for(years.size(), threads, [&](std::size_t t) {
    Rng year_rng(key, t);
    CrossSection cs = cross_section_at(work, years[t]);
    if (!fe && !te) cs = cs.with_intercept();
    if (cs.size() < multiple) {
      fail(ErrorKind::insufficient_data,
           "year " + std::to_string(years[t]) + " has " + std::to_string(cs.size()) +
               " firms, fewer than 2*blocks_per_year=" + std::to_string(multiple));
    }
    const auto kept = discard_to_multiple_rows(cs.size(), multiple, year_rng);
    per_year[t].discarded = static_cast<std::size_t>(cs.size()) - kept.size();
    if (per_year[t].discarded > 0) cs = cs.subset(kept);
    const BlockPartition partition = make_partition(cs.size(), blocks_per_year, mode, year_rng);
    if (te) cs = block_demean(cs, partition);
    try {
      per_year[t].values = block_values(cs, partition);
    } catch (const Error& e) {
      fail(e.kind(), "year " + std::to_string(years[t]) + ": " + e.what());
    }
  });

  SubsampleEstimates subs;
  std::size_t discarded = 0;
  for (std::size_t t = 0; t < years.size(); ++t) {
    discarded += per_year[t].discarded;
    for (std::size_t j = 0; j < per_year[t].values.size(); ++j) {
      const auto& v = per_year[t].values[j];
      if (!v) {
        ++subs.degenerate;
        continue;
      }
      subs.values.push_back(*v);
      subs.year.push_back(years[t]);
      subs.block.push_back(static_cast<int>(j));
    }
  }
  if (subs.values.empty()) fail(ErrorKind::degenerate_block, "every block has a zero denominator");

  CrossSection design = pooled_design(panel, fe, te);
  const double beta = median(subs.values);
  Vector gamma(design.num_controls());
  if (design.num_controls() > 0) {
    gamma = LeastSquares(design.z(), "pooled design").coef(design.y() - beta * design.x());
  }
  auto names = design.control_names();
  return PanelDcResult{beta, std::move(gamma), std::move(names), std::move(subs), discarded,
                       std::move(design)};
}

}  // namespace eivdc
