// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>

#include "lsat/attention_ops.hpp"
#include "lsat/nn.hpp"
#include "lsat/shift_embed.hpp"

namespace lsat {

template <typename T>
struct LocalAttnParams {
  Tensor<T> query;       // U_q [D x D]
  Tensor<T> key_value;   // U_kv [D x 2D], keys in the left half
  Tensor<T> proj_weight; // [D x D]
  Tensor<T> proj_bias;   // [D]
  LayerNormParams<T> norm1;
  LayerNormParams<T> norm2;
  FeedForward<T> ffn;
  std::size_t heads = 1;

  std::size_t width() const { return query.dim(0); }
};

template <typename T>
LocalAttnParams<T> make_local_attn_params(ParameterStore<T>& store, Initializer& init, const std::string& prefix,
                                          std::size_t width, std::size_t heads);

template <typename T>
struct LocalAttnOutput {
  Tensor<T> tokens;   // [B x D]
  Tensor<T> weights;  // [B x heads x T], diagnostic only
};

// q = X U_q, where X holds the identity-variant tokens only.
template <typename T>
Tensor<T> local_queries(const VariantEmbedding<T>& embedding, const Tensor<T>& query_weight);

// [k v] = Z U_kv over all T*B variant tokens, regrouped per patch to
// [B x T x D] each.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> local_keys_values(const VariantEmbedding<T>& embedding,
                                                  const Tensor<T>& key_value_weight);

// Pre-norm local attention block. The identity-variant tokens carry the
// residual stream:
//   y   = x_1 + Proj(LocalAttn(LN1(Z)))
//   out = y + FFN(LN2(y))
template <typename T>
LocalAttnOutput<T> local_block(const VariantEmbedding<T>& embedding, const LocalAttnParams<T>& params);

}  // namespace lsat
