// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference computations for tests: central finite differences
// and brute-force loops that share no code with the library kernels.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "lsat/ops.hpp"
#include "lsat/tensor.hpp"

namespace lsat::testing {

template <typename T = double>
Tensor<T> random_tensor(Shape shape, std::mt19937_64& rng, bool requires_grad = false, double stddev = 1.0) {
  std::normal_distribution<double> normal(0.0, stddev);
  std::vector<T> values(shape_numel(shape));
  for (T& v : values) v = static_cast<T>(normal(rng));
  return Tensor<T>(std::move(shape), std::move(values), requires_grad);
}

// Central differences of a scalar function with respect to every entry of
// the leaf `x`.
inline std::vector<double> numeric_gradient(const std::function<double()>& f, Tensor<double>& x, double h = 1e-5) {
  std::vector<double> grad(x.numel());
  auto values = x.mutable_data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    double saved = values[i];
    values[i] = saved + h;
    double plus = f();
    values[i] = saved - h;
    double minus = f();
    values[i] = saved;
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

inline double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                                 double floor = 1e-8) {
  double worst = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    double a = analytic.empty() ? 0.0 : analytic[i];
    double denom = std::max({std::abs(a), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(a - numeric[i]) / denom);
  }
  return worst;
}

// Compares the gradient of loss = sum(forward() * probe), for a fixed random
// probe, with central differences for every entry of every input. Inputs must
// be 64-bit leaves requiring grad. Returns the largest relative error.
inline double gradcheck_inputs(const std::function<Tensor<double>()>& forward, std::vector<Tensor<double>> inputs,
                               std::uint64_t seed = 7, double floor = 1e-6) {
  Tensor<double> out = forward();
  std::mt19937_64 rng(seed);
  Tensor<double> probe = random_tensor<double>(out.shape(), rng);
  for (auto& in : inputs) in.zero_grad();
  sum(mul(out, probe)).backward();

  auto scalar = [&]() {
    NoGradGuard guard;
    Tensor<double> out = forward();
    auto y = out.data();
    auto w = probe.data();
    double value = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) value += y[i] * w[i];
    return value;
  };
  double worst = 0.0;
  for (auto& in : inputs) {
    std::vector<double> analytic(in.grad().begin(), in.grad().end());
    std::vector<double> numeric = numeric_gradient(scalar, in);
    worst = std::max(worst, max_relative_error(analytic, numeric, floor));
  }
  return worst;
}

// Brute-force references.
inline std::vector<double> naive_matmul(std::span<const double> a, std::span<const double> b, std::size_t m,
                                        std::size_t k, std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) c[i * n + j] += a[i * k + p] * b[p * n + j];
  return c;
}

// Direct convolution; `circular` wraps indices instead of reading zeros.
inline std::vector<double> naive_conv(std::span<const double> x, std::span<const double> w, std::size_t c_in,
                                      std::size_t h, std::size_t wd, std::size_t c_out, std::size_t k,
                                      std::size_t stride, std::size_t pad, bool circular) {
  std::size_t ho = (h + 2 * pad - k) / stride + 1, wo = (wd + 2 * pad - k) / stride + 1;
  std::vector<double> out(c_out * ho * wo, 0.0);
  for (std::size_t o = 0; o < c_out; ++o)
    for (std::size_t y = 0; y < ho; ++y)
      for (std::size_t xx = 0; xx < wo; ++xx) {
        double acc = 0.0;
        for (std::size_t c = 0; c < c_in; ++c)
          for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) {
              long sy = static_cast<long>(y * stride + i) - static_cast<long>(pad);
              long sx = static_cast<long>(xx * stride + j) - static_cast<long>(pad);
              if (circular) {
                sy = ((sy % static_cast<long>(h)) + static_cast<long>(h)) % static_cast<long>(h);
                sx = ((sx % static_cast<long>(wd)) + static_cast<long>(wd)) % static_cast<long>(wd);
              } else if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) || sx >= static_cast<long>(wd)) {
                continue;
              }
              acc += x[(c * h + sy) * wd + sx] * w[((o * c_in + c) * k + i) * k + j];
            }
        out[(o * ho + y) * wo + xx] = acc;
      }
  return out;
}

// Window maxima of a 3x3 / stride 2 / pad 1 pool.
inline std::vector<double> naive_max_pool(std::span<const double> x, std::size_t c, std::size_t h, std::size_t w) {
  std::size_t ho = (h + 1) / 2, wo = (w + 1) / 2;
  std::vector<double> out(c * ho * wo);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < ho; ++y)
      for (std::size_t xx = 0; xx < wo; ++xx) {
        double best = -INFINITY;
        for (long i = -1; i <= 1; ++i)
          for (long j = -1; j <= 1; ++j) {
            long sy = static_cast<long>(2 * y) + i, sx = static_cast<long>(2 * xx) + j;
            if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) || sx >= static_cast<long>(w)) continue;
            best = std::max(best, x[(ch * h + sy) * w + sx]);
          }
        out[(ch * ho + y) * wo + xx] = best;
      }
  return out;
}

}  // namespace lsat::testing
