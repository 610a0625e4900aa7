// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsat/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "lsat/attention_ops.hpp"
#include "lsat/error.hpp"
#include "lsat/op_counter.hpp"
#include "lsat/ops.hpp"

namespace lsat {
namespace {

Tensor<float> random_tensor(Shape shape, std::mt19937_64& rng) {
  std::normal_distribution<float> normal(0.0f, 1.0f);
  Tensor<float> t(std::move(shape));
  for (float& v : t.mutable_data()) v = normal(rng);
  return t;
}

std::uint64_t metric_of(const BenchRow& row, BenchMetric metric) {
  return metric == BenchMetric::kLocal ? row.local_muladds : row.global_muladds;
}

}  // namespace

BenchResult bench_scaling(std::span<const std::size_t> patches, std::span<const std::size_t> variants,
                          std::size_t width, std::size_t heads, std::uint64_t seed) {
  if (patches.empty() || variants.empty()) throw ContractError("bench_scaling: empty sweep list");
  if (width == 0 || heads == 0 || width % heads != 0) throw ContractError("bench_scaling: width must divide by heads");
  std::vector<std::size_t> bs(patches.begin(), patches.end());
  std::vector<std::size_t> ts(variants.begin(), variants.end());
  std::sort(bs.begin(), bs.end());
  std::sort(ts.begin(), ts.end());

  NoGradGuard guard;
  std::mt19937_64 rng(seed);
  Tensor<float> u_q = random_tensor({width, width}, rng);
  Tensor<float> u_kv = random_tensor({width, 2 * width}, rng);
  Tensor<float> w_qkv = random_tensor({width, 3 * width}, rng);
  Tensor<float> b_qkv = random_tensor({3 * width}, rng);

  BenchResult result;
  for (std::size_t b : bs) {
    for (std::size_t t : ts) {
      if (b == 0 || t == 0) throw ContractError("bench_scaling: B and T must be positive");
      BenchRow row{b, t, width};
      Tensor<float> z = random_tensor({t * b, width}, rng);
      Tensor<float> x = random_tensor({b, width}, rng);
      auto start = std::chrono::steady_clock::now();
      {
        OpCounter counter;
        CountingScope scope(counter);
        Tensor<float> q = matmul(slice(z, 0, b), u_q);
        Tensor<float> kv = matmul(z, u_kv);
        local_attention(q, variant_block(kv, t, b, 0, width), variant_block(kv, t, b, width, width), heads);
        row.local_muladds = counter.mul_adds(kLocalAttentionTag);
        row.local_total_muladds = counter.mul_adds();
      }
      {
        OpCounter counter;
        CountingScope scope(counter);
        self_attention(linear(x, w_qkv, b_qkv), heads);
        row.global_muladds = counter.mul_adds(kGlobalAttentionTag);
        row.global_total_muladds = counter.mul_adds();
      }
      row.wall_ns = static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count());
      result.rows.push_back(row);
    }
  }
  return result;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("loglog_slope needs at least two points");
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw ContractError("loglog_slope needs positive values");
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw ContractError("loglog_slope needs distinct x values");
  return (n * sxy - sx * sy) / denom;
}

double slope_vs_patches(const BenchResult& result, std::size_t variants, BenchMetric metric) {
  std::vector<double> x, y;
  for (const auto& row : result.rows) {
    if (row.variants != variants) continue;
    x.push_back(static_cast<double>(row.patches));
    y.push_back(static_cast<double>(metric_of(row, metric)));
  }
  return loglog_slope(x, y);
}

double slope_vs_variants(const BenchResult& result, std::size_t patches, BenchMetric metric) {
  std::vector<double> x, y;
  for (const auto& row : result.rows) {
    if (row.patches != patches) continue;
    x.push_back(static_cast<double>(row.variants));
    y.push_back(static_cast<double>(metric_of(row, metric)));
  }
  return loglog_slope(x, y);
}

void write_bench_csv(std::ostream& out, const BenchResult& result) {
  out << "B,T,D,local_muladds,global_muladds,local_total_muladds,global_total_muladds,wall_ns\n";
  for (const auto& r : result.rows) {
    out << r.patches << ',' << r.variants << ',' << r.width << ',' << r.local_muladds << ',' << r.global_muladds
        << ',' << r.local_total_muladds << ',' << r.global_total_muladds << ',' << r.wall_ns << '\n';
  }
}

}  // namespace lsat
