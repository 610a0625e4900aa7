// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

namespace lsat {

// One (B, T) point of the attention cost sweep. *_muladds are the counted
// attention-core mul-adds (scores plus value pooling); *_total_muladds add
// the surrounding projections.
struct BenchRow {
  std::size_t patches = 0;   // B
  std::size_t variants = 0;  // T
  std::size_t width = 0;     // D
  std::uint64_t local_muladds = 0;
  std::uint64_t global_muladds = 0;
  std::uint64_t local_total_muladds = 0;
  std::uint64_t global_total_muladds = 0;
  std::uint64_t wall_ns = 0;
};

struct BenchResult {
  std::vector<BenchRow> rows;  // sorted by B, then T
};

// Runs forward-only local and global attention on random inputs for every
// (B, T) pair under an OpCounter.
BenchResult bench_scaling(std::span<const std::size_t> patches, std::span<const std::size_t> variants,
                          std::size_t width, std::size_t heads = 3, std::uint64_t seed = 0);

// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

enum class BenchMetric { kLocal, kGlobal };

// Slope of the metric against B at fixed T, or against T at fixed B.
double slope_vs_patches(const BenchResult& result, std::size_t variants, BenchMetric metric);
double slope_vs_variants(const BenchResult& result, std::size_t patches, BenchMetric metric);

// Header row plus one line per row, LF endings. wall_ns is the last column.
void write_bench_csv(std::ostream& out, const BenchResult& result);

}  // namespace lsat
