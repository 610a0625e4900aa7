// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "lsat/nn.hpp"
#include "lsat/shift_embed.hpp"

namespace lsat {

template <typename T>
struct GlobalBlockParams {
  Tensor<T> qkv_weight;  // [D x 3D], columns [q | k | v]
  Tensor<T> qkv_bias;    // [3D]
  Tensor<T> proj_weight; // [D x D]
  Tensor<T> proj_bias;   // [D]
  LayerNormParams<T> norm1;
  LayerNormParams<T> norm2;
  FeedForward<T> ffn;
  std::size_t heads = 1;

  std::size_t width() const { return qkv_weight.dim(0); }
};

template <typename T>
GlobalBlockParams<T> make_global_block_params(ParameterStore<T>& store, Initializer& init,
                                              const std::string& prefix, std::size_t width, std::size_t heads);

// Pre-norm transformer block over all B tokens:
//   h   = x + Proj(MHSA(LN1(x)))
//   out = h + FFN(LN2(h))
template <typename T>
Tensor<T> global_block(const Tensor<T>& tokens, const GlobalBlockParams<T>& params);

// 3x3 convolution (stride 1, padding 1) to D_down channels, then the fixed
// 3x3 / stride 2 / padding 1 max-pool.
template <typename T>
struct DownsampleParams {
  Tensor<T> weight;  // [D_down x D x 3 x 3]
  Tensor<T> bias;    // [D_down]
};

template <typename T>
DownsampleParams<T> make_downsample_params(ParameterStore<T>& store, Initializer& init, const std::string& prefix,
                                           std::size_t in_width, std::size_t out_width);

template <typename T>
struct Downsampled {
  Tensor<T> tokens;  // [B' x D_down]
  PatchGrid grid;    // ceil(B_h / 2) x ceil(B_w / 2)
};

// Token view -> grid view -> conv + pool -> token view.
template <typename T>
Downsampled<T> downsample(const Tensor<T>& tokens, PatchGrid grid, const DownsampleParams<T>& params);

template <typename T>
struct ClassifierParams {
  Tensor<T> weight;  // [D x C]
  Tensor<T> bias;    // [C]
};

template <typename T>
ClassifierParams<T> make_classifier_params(ParameterStore<T>& store, Initializer& init, const std::string& prefix,
                                           std::size_t width, std::size_t classes);

// Global average pool over tokens [B x D], then an affine map to C logits.
template <typename T>
Tensor<T> classifier_head(const Tensor<T>& tokens, const ClassifierParams<T>& params);

}  // namespace lsat
