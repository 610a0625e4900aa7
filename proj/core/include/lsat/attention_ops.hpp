// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

#include "lsat/tensor.hpp"

namespace lsat {

// OpCounter tags under which the attention cores record their score and
// value-pooling mul-adds.
inline constexpr std::string_view kLocalAttentionTag = "local_attention";
inline constexpr std::string_view kGlobalAttentionTag = "global_attention";

template <typename T>
struct LocalAttentionResult {
  Tensor<T> pooled;   // [B x D], heads concatenated
  Tensor<T> weights;  // [B x heads x T], constant (no graph)
};

// Per-patch multi-head attention over shift variants. For patch i and head h,
// w = softmax(q_i,h . k_i,h^T / sqrt(D_h)) over the T variants and the pooled
// value is w . v_i,h. Patches never interact.
//
// q [B x D], k and v [B x T x D]. Counts 2*B*T*D mul-adds.
template <typename T>
LocalAttentionResult<T> local_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                        std::size_t heads);

// Regroups rows of a variant-major projection [(T*B) x W] into per-patch
// blocks: out[b, t, j] = kv[t*B + b, column + j], shape [B x T x width].
template <typename T>
Tensor<T> variant_block(const Tensor<T>& kv, std::size_t variants, std::size_t patches, std::size_t column,
                        std::size_t width);

// All-pairs multi-head attention on a joint projection qkv [B x 3D] laid out
// as [q | k | v]. Returns [B x D] with heads concatenated. Counts 2*B*B*D.
template <typename T>
Tensor<T> self_attention(const Tensor<T>& qkv, std::size_t heads);

}  // namespace lsat
