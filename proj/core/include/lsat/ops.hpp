// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "lsat/tensor.hpp"

namespace lsat {

// [m x k] . [k x n] -> [m x n]; counts m*k*n mul-adds.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// x [m x k] . weight [k x n] (+ bias [n]). Weights are stored input-major so
// that a projection reads as x * U, as in q = X U_q.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias = {});

// Elementwise sum. `b` may also be a tile of `a`: its shape equals a's
// trailing extents, or a's shape with a leading 1, and is repeated to fill a.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

// Exact (erf-based) GELU.
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

// Normalizes over the last axis, then applies gain and bias.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps = T(1e-6));

// Max-subtracted softmax along `axis` (negative counts from the back).
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis = -1);

enum class PadMode { kZero, kCircular };

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
  PadMode pad_mode = PadMode::kZero;
};

// x [C_in x H x W], weight [C_out x C_in x K x K], optional bias [C_out].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, Conv2dOptions options);

// Max over k x k windows; padded cells never win. Gradient goes to the first
// maximal element of each window in row-major order.
template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& x, std::size_t kernel = 3, std::size_t stride = 2, std::size_t padding = 1);

// Circular translation of the two trailing axes:
// out[c, y, x] = in[c, (y + dy) mod H, (x + dx) mod W].
template <typename T>
Tensor<T> roll2d(const Tensor<T>& x, long dx, long dy);

// Same indexing as roll2d but out-of-range reads are mirrored at the border
// (reflection without edge repeat).
template <typename T>
Tensor<T> translate_reflect(const Tensor<T>& x, long dx, long dy);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

// [m x n] -> [n x m].
template <typename T>
Tensor<T> transpose(const Tensor<T>& x);

// Rows [begin, end) along the first axis.
template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t begin, std::size_t end);

// Concatenates along the first axis; trailing extents must agree.
template <typename T>
Tensor<T> concat(std::span<const Tensor<T>> parts);

// Stacks equally shaped tensors along a new leading axis.
template <typename T>
Tensor<T> stack(std::span<const Tensor<T>> parts);

// Mean over the first axis: [m x ...] -> [...].
template <typename T>
Tensor<T> mean_rows(const Tensor<T>& x);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);

template <typename T>
Tensor<T> mean(const Tensor<T>& x);

// Mean softmax cross-entropy of logits [N x C] against integer labels.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

}  // namespace lsat
