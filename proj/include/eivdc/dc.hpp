#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "eivdc/data_model.hpp"
#include "eivdc/estimators.hpp"
#include "eivdc/rng.hpp"

namespace eivdc {

enum class PartitionMode { random, adjacent };

std::string_view to_string(PartitionMode mode) noexcept;
/// Parses "random" or "adjacent"; anything else is a parameter error.
PartitionMode parse_partition_mode(std::string_view text);

struct Block {
  std::vector<Index> r1;  // numerator half
  std::vector<Index> r2;  // denominator half
};

struct BlockPartition {
  std::vector<Block> blocks;
  PartitionMode mode = PartitionMode::random;

  /// Rows per half-block (b/2).
  Index half_size() const { return blocks.empty() ? 0 : static_cast<Index>(blocks[0].r1.size()); }
};

/// Splits rows 0..n-1 into B blocks of 2*(n/2B) rows; each block's first half
/// is R1 and its second half R2. Random mode permutes the rows first.
BlockPartition make_partition(Index n, int blocks, PartitionMode mode, Rng& rng);

/// Subsample values with their (year, block) labels. Degenerate blocks are
/// left out of `values` and counted.
struct SubsampleEstimates {
  std::vector<double> values;
  std::vector<int> year;
  std::vector<int> block;
  std::size_t degenerate = 0;
};

/// sum_{R1} x'y'^2 / sum_{R2} x''^2 y'' on subset-residualized data. A zero
/// denominator is a degenerate_block error.
double dc_subsample(const CrossSection& cs, std::span<const Index> r1,
                    std::span<const Index> r2);

struct DcResult {
  double beta = 0.0;
  SubsampleEstimates subsamples;
  BlockPartition partition;
};

/// Median of the B subsample ratios. The partition is drawn from
/// Rng(rng(), 0), matching year 0 of panel_dc_estimate.
DcResult dc_estimate(const CrossSection& cs, int blocks, PartitionMode mode, Rng& rng);

/// Subtracts each firm's own time mean from y, x and z.
PanelData within_transform(const PanelData& panel);

/// Subtracts the R1 and R2 means separately from y, x and z in every block.
/// Rows outside the partition are left unchanged.
CrossSection block_demean(const CrossSection& cs, const BlockPartition& partition);

struct PanelDcResult {
  double beta = 0.0;
  Vector gamma;
  std::vector<std::string> gamma_names;
  SubsampleEstimates subsamples;
  /// Rows dropped so each year divides into 2*blocks_per_year halves.
  std::size_t discarded_rows = 0;
  /// Transformed pooled data used for the gamma formula.
  CrossSection design;
};

/// Panel pipeline: optional within transform, per-year random partition and
/// discard, optional block demeaning, per-half partialling out, median over
/// all years and blocks. Without fe and te an intercept joins the controls.
/// Year t (in sorted order) draws from Rng(key, t) with key = rng().
PanelDcResult panel_dc_estimate(const PanelData& panel, int blocks_per_year, bool fe, bool te,
                                PartitionMode mode, Rng& rng, unsigned threads = 1);

/// Pooled design for the pooled estimators and the gamma formula: within
/// transform for fe, year demeaning for te, alternating projections for both,
/// an intercept column when neither is set.
CrossSection pooled_design(const PanelData& panel, bool fe, bool te);

}  // namespace eivdc
