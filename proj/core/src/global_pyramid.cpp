// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsat/global_pyramid.hpp"

#include <cmath>

#include "lsat/attention_ops.hpp"
#include "lsat/error.hpp"
#include "lsat/ops.hpp"

namespace lsat {

template <typename T>
GlobalBlockParams<T> make_global_block_params(ParameterStore<T>& store, Initializer& init,
                                              const std::string& prefix, std::size_t width, std::size_t heads) {
  if (heads == 0 || width % heads != 0) {
    throw ConfigError("global block width " + std::to_string(width) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  GlobalBlockParams<T> p;
  p.heads = heads;
  p.norm1 = make_layer_norm(store, prefix + ".norm1", width);
  p.qkv_weight = make_linear_weight(store, init, prefix + ".attn.qkv.weight", width, 3 * width);
  p.qkv_bias = make_zero_bias(store, prefix + ".attn.qkv.bias", 3 * width);
  p.proj_weight = make_linear_weight(store, init, prefix + ".attn.proj.weight", width, width);
  p.proj_bias = make_zero_bias(store, prefix + ".attn.proj.bias", width);
  p.norm2 = make_layer_norm(store, prefix + ".norm2", width);
  p.ffn = make_feed_forward(store, init, prefix + ".ffn", width, kFeedForwardRatio * width);
  return p;
}

template <typename T>
Tensor<T> global_block(const Tensor<T>& tokens, const GlobalBlockParams<T>& params) {
  if (tokens.rank() != 2 || tokens.dim(1) != params.width()) {
    throw DimensionError("global_block: tokens " + shape_string(tokens.shape()) + " vs width " +
                         std::to_string(params.width()));
  }
  Tensor<T> qkv = linear(apply_layer_norm(tokens, params.norm1), params.qkv_weight, params.qkv_bias);
  Tensor<T> h = add(tokens, linear(self_attention(qkv, params.heads), params.proj_weight, params.proj_bias));
  return add(h, apply_feed_forward(apply_layer_norm(h, params.norm2), params.ffn));
}

template <typename T>
DownsampleParams<T> make_downsample_params(ParameterStore<T>& store, Initializer& init, const std::string& prefix,
                                           std::size_t in_width, std::size_t out_width) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_width * 9));
  return {store.add(prefix + ".conv.weight", init.uniform<T>({out_width, in_width, 3, 3}, bound), true),
          store.add(prefix + ".conv.bias", init.uniform<T>({out_width}, bound), true)};
}

template <typename T>
Downsampled<T> downsample(const Tensor<T>& tokens, PatchGrid grid, const DownsampleParams<T>& params) {
  if (tokens.rank() != 2 || tokens.dim(0) != grid.tokens()) {
    throw ContractError("downsample: " + shape_string(tokens.shape()) + " tokens do not fill a " +
                        std::to_string(grid.rows) + "x" + std::to_string(grid.cols) + " grid");
  }
  const std::size_t width = tokens.dim(1);
  Tensor<T> map = reshape(transpose(tokens), {width, grid.rows, grid.cols});
  Tensor<T> conv = conv2d(map, params.weight, params.bias, {1, 1, PadMode::kZero});
  Tensor<T> pooled = max_pool2d(conv, 3, 2, 1);
  const std::size_t out_width = pooled.dim(0);
  PatchGrid next{pooled.dim(1), pooled.dim(2)};
  return {transpose(reshape(pooled, {out_width, next.tokens()})), next};
}

template <typename T>
ClassifierParams<T> make_classifier_params(ParameterStore<T>& store, Initializer& init, const std::string& prefix,
                                           std::size_t width, std::size_t classes) {
  return {make_linear_weight(store, init, prefix + ".weight", width, classes),
          make_zero_bias(store, prefix + ".bias", classes)};
}

template <typename T>
Tensor<T> classifier_head(const Tensor<T>& tokens, const ClassifierParams<T>& params) {
  if (tokens.rank() != 2) throw DimensionError("classifier_head: expected [B x D], got " + shape_string(tokens.shape()));
  Tensor<T> pooled = reshape(mean_rows(tokens), {1, tokens.dim(1)});
  Tensor<T> logits = linear(pooled, params.weight, params.bias);
  return reshape(logits, {logits.dim(1)});
}

#define LSAT_INSTANTIATE_GLOBAL(T)                                                                            \
  template GlobalBlockParams<T> make_global_block_params(ParameterStore<T>&, Initializer&, const std::string&, \
                                                         std::size_t, std::size_t);                           \
  template Tensor<T> global_block(const Tensor<T>&, const GlobalBlockParams<T>&);                             \
  template DownsampleParams<T> make_downsample_params(ParameterStore<T>&, Initializer&, const std::string&,   \
                                                      std::size_t, std::size_t);                              \
  template Downsampled<T> downsample(const Tensor<T>&, PatchGrid, const DownsampleParams<T>&);                \
  template ClassifierParams<T> make_classifier_params(ParameterStore<T>&, Initializer&, const std::string&,   \
                                                      std::size_t, std::size_t);                              \
  template Tensor<T> classifier_head(const Tensor<T>&, const ClassifierParams<T>&);

LSAT_INSTANTIATE_GLOBAL(float)
LSAT_INSTANTIATE_GLOBAL(double)

}  // namespace lsat
