// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lsat/nn.hpp"
#include "lsat/tensor.hpp"

namespace lsat {

// Pixel displacement of a shift variant; dx is horizontal, dy vertical.
struct Shift {
  int dx = 0;
  int dy = 0;
  friend auto operator<=>(const Shift&, const Shift&) = default;
};

// Ordered, duplicate-free list of shifts whose first entry is (0, 0).
class ShiftSpec {
 public:
  ShiftSpec() : shifts_{{0, 0}} {}
  explicit ShiftSpec(std::vector<Shift> shifts);

  std::size_t size() const { return shifts_.size(); }
  const Shift& operator[](std::size_t i) const { return shifts_[i]; }
  const std::vector<Shift>& shifts() const { return shifts_; }
  auto begin() const { return shifts_.begin(); }
  auto end() const { return shifts_.end(); }
  int max_magnitude() const;

  friend bool operator==(const ShiftSpec&, const ShiftSpec&) = default;

 private:
  std::vector<Shift> shifts_;
};

// Built-in shift sets: "cifar" (T=18), "imagenet" (T=10) and "ablation-9",
// the axis-aligned 9-shift subset. Unknown keys raise ConfigError.
ShiftSpec default_shift_set(std::string_view key);

// Logical B_h x B_w arrangement of B tokens.
struct PatchGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t tokens() const { return rows * cols; }
  friend bool operator==(const PatchGrid&, const PatchGrid&) = default;
};

enum class PositionalMode { kPerVariant, kShared };

std::string_view to_string(PositionalMode mode);
PositionalMode positional_mode_from_string(std::string_view text);

// Token embeddings of all variants: tokens [T x B x D], variant 0 unshifted.
template <typename T>
struct VariantEmbedding {
  Tensor<T> tokens;
  PatchGrid grid;

  std::size_t variants() const { return tokens.dim(0); }
  std::size_t patches() const { return tokens.dim(1); }
  std::size_t width() const { return tokens.dim(2); }
};

template <typename T>
struct PositionalTable {
  Tensor<T> table;  // [T x B x D] per-variant, [1 x B x D] shared
  PositionalMode mode = PositionalMode::kPerVariant;
};

template <typename T>
struct ConvParams {
  Tensor<T> weight;  // [C_out x C_in x K x K]
  Tensor<T> bias;    // [C_out]
};

struct EmbedGeometry {
  std::size_t patch_size = 1;  // stride S
  std::size_t kernel = 1;      // K
  std::size_t padding = 0;     // P
  // false: variants come from reflection-padded translations of the image
  // through one shared convolution (the precomputed-translation ablation).
  bool conv_variations = true;
  friend bool operator==(const EmbedGeometry&, const EmbedGeometry&) = default;
};

// Circular translation of an image [C x H x W] so that the output pixel at
// (y, x) is the input pixel at ((y + dy) mod H, (x + dx) mod W). Requires
// |dx| <= W and |dy| <= H.
template <typename T>
Tensor<T> shift_image(const Tensor<T>& image, Shift shift);

// Token grid produced by the embedding convolution on an H x W image.
PatchGrid embedding_grid(std::size_t height, std::size_t width, const EmbedGeometry& geometry);

// Embeds every shift variant of `image`. With conv variations, variant s is
// conv(shift_image(image, spec[s]), convs[s]); otherwise convs holds a single
// shared convolution applied to reflection-padded translations.
template <typename T>
VariantEmbedding<T> embed_variants(const Tensor<T>& image, const ShiftSpec& spec,
                                   std::span<const ConvParams<T>> convs, const EmbedGeometry& geometry);

template <typename T>
VariantEmbedding<T> add_positional(const VariantEmbedding<T>& embedding, const PositionalTable<T>& positional);

// Owns the per-variant convolutions and positional table of the first stage.
template <typename T>
class ShiftEmbedding {
 public:
  ShiftEmbedding(ShiftSpec spec, const EmbedGeometry& geometry, PositionalMode mode, std::size_t channels,
                 std::size_t height, std::size_t width, std::size_t embed_width, ParameterStore<T>& store,
                 Initializer& init, const std::string& prefix);

  // embed_variants followed by add_positional.
  VariantEmbedding<T> operator()(const Tensor<T>& image) const;

  const ShiftSpec& spec() const { return spec_; }
  const EmbedGeometry& geometry() const { return geometry_; }
  const std::vector<ConvParams<T>>& convs() const { return convs_; }
  const PositionalTable<T>& positional() const { return positional_; }
  PatchGrid grid() const { return grid_; }

 private:
  ShiftSpec spec_;
  EmbedGeometry geometry_;
  PatchGrid grid_;
  std::vector<ConvParams<T>> convs_;
  PositionalTable<T> positional_;
};

}  // namespace lsat
