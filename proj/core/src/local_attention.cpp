// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsat/local_attention.hpp"

#include "lsat/error.hpp"
#include "lsat/ops.hpp"

namespace lsat {

template <typename T>
LocalAttnParams<T> make_local_attn_params(ParameterStore<T>& store, Initializer& init, const std::string& prefix,
                                          std::size_t width, std::size_t heads) {
  if (heads == 0 || width % heads != 0) {
    throw ConfigError("local attention width " + std::to_string(width) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  LocalAttnParams<T> p;
  p.heads = heads;
  p.norm1 = make_layer_norm(store, prefix + ".norm1", width);
  p.query = make_linear_weight(store, init, prefix + ".attn.query", width, width);
  p.key_value = make_linear_weight(store, init, prefix + ".attn.key_value", width, 2 * width);
  p.proj_weight = make_linear_weight(store, init, prefix + ".attn.proj.weight", width, width);
  p.proj_bias = make_zero_bias(store, prefix + ".attn.proj.bias", width);
  p.norm2 = make_layer_norm(store, prefix + ".norm2", width);
  p.ffn = make_feed_forward(store, init, prefix + ".ffn", width, kFeedForwardRatio * width);
  return p;
}

template <typename T>
Tensor<T> local_queries(const VariantEmbedding<T>& embedding, const Tensor<T>& query_weight) {
  const std::size_t patches = embedding.patches(), width = embedding.width();
  Tensor<T> identity = reshape(slice(embedding.tokens, 0, 1), {patches, width});
  return matmul(identity, query_weight);
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> local_keys_values(const VariantEmbedding<T>& embedding,
                                                  const Tensor<T>& key_value_weight) {
  const std::size_t variants = embedding.variants(), patches = embedding.patches(), width = embedding.width();
  if (key_value_weight.rank() != 2 || key_value_weight.dim(0) != width || key_value_weight.dim(1) != 2 * width) {
    throw DimensionError("local_keys_values: U_kv must be " + shape_string({width, 2 * width}) + ", got " +
                         shape_string(key_value_weight.shape()));
  }
  Tensor<T> all_tokens = reshape(embedding.tokens, {variants * patches, width});
  Tensor<T> projected = matmul(all_tokens, key_value_weight);
  return {variant_block(projected, variants, patches, 0, width),
          variant_block(projected, variants, patches, width, width)};
}

template <typename T>
LocalAttnOutput<T> local_block(const VariantEmbedding<T>& embedding, const LocalAttnParams<T>& params) {
  const std::size_t variants = embedding.variants(), patches = embedding.patches(), width = embedding.width();
  if (width != params.width()) {
    throw DimensionError("local_block: embedding width " + std::to_string(width) + " vs parameters " +
                         std::to_string(params.width()));
  }
  Tensor<T> flat = reshape(embedding.tokens, {variants * patches, width});
  Tensor<T> residual = slice(flat, 0, patches);

  VariantEmbedding<T> normalized{reshape(apply_layer_norm(flat, params.norm1), {variants, patches, width}),
                                 embedding.grid};
  Tensor<T> q = local_queries(normalized, params.query);
  auto [k, v] = local_keys_values(normalized, params.key_value);
  auto attended = local_attention(q, k, v, params.heads);

  Tensor<T> y = add(residual, linear(attended.pooled, params.proj_weight, params.proj_bias));
  Tensor<T> out = add(y, apply_feed_forward(apply_layer_norm(y, params.norm2), params.ffn));
  return {std::move(out), std::move(attended.weights)};
}

#define LSAT_INSTANTIATE_LOCAL(T)                                                                              \
  template LocalAttnParams<T> make_local_attn_params(ParameterStore<T>&, Initializer&, const std::string&,    \
                                                     std::size_t, std::size_t);                                \
  template Tensor<T> local_queries(const VariantEmbedding<T>&, const Tensor<T>&);                              \
  template std::pair<Tensor<T>, Tensor<T>> local_keys_values(const VariantEmbedding<T>&, const Tensor<T>&);   \
  template LocalAttnOutput<T> local_block(const VariantEmbedding<T>&, const LocalAttnParams<T>&);

LSAT_INSTANTIATE_LOCAL(float)
LSAT_INSTANTIATE_LOCAL(double)

}  // namespace lsat
