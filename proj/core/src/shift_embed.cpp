// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsat/shift_embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "lsat/error.hpp"
#include "lsat/ops.hpp"

namespace lsat {

ShiftSpec::ShiftSpec(std::vector<Shift> shifts) : shifts_(std::move(shifts)) {
  if (shifts_.empty() || shifts_.front() != Shift{0, 0}) {
    throw ConfigError("shift spec must start with the identity shift (0, 0)");
  }
  std::set<Shift> seen;
  for (const auto& s : shifts_) {
    if (!seen.insert(s).second) {
      throw ConfigError("duplicate shift (" + std::to_string(s.dx) + ", " + std::to_string(s.dy) + ")");
    }
  }
}

int ShiftSpec::max_magnitude() const {
  int m = 0;
  for (const auto& s : shifts_) m = std::max({m, std::abs(s.dx), std::abs(s.dy)});
  return m;
}

ShiftSpec default_shift_set(std::string_view key) {
  if (key == "cifar") {
    return ShiftSpec({{0, 0}, {1, 0}, {0, 1}, {-1, 0}, {0, -1}, {2, 0}, {0, 2}, {-2, 0}, {0, -2},
                      {1, 1}, {1, 2}, {1, -1}, {-1, 1}, {-1, 2}, {-1, -1}, {2, 1}, {2, 2}, {2, -1}});
  }
  if (key == "imagenet") {
    return ShiftSpec({{0, 0}, {1, 0}, {2, 0}, {3, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 1}, {2, 2}, {3, 3}});
  }
  if (key == "ablation-9") {
    return ShiftSpec({{0, 0}, {0, 1}, {0, 2}, {1, 0}, {2, 0}, {-1, 0}, {-2, 0}, {0, -1}, {0, -2}});
  }
  throw ConfigError("unknown shift set '" + std::string(key) + "' (expected cifar, imagenet or ablation-9)");
}

std::string_view to_string(PositionalMode mode) {
  return mode == PositionalMode::kShared ? "shared" : "per-variant";
}

PositionalMode positional_mode_from_string(std::string_view text) {
  if (text == "per-variant") return PositionalMode::kPerVariant;
  if (text == "shared") return PositionalMode::kShared;
  throw ConfigError("unknown positional mode '" + std::string(text) + "'");
}

template <typename T>
Tensor<T> shift_image(const Tensor<T>& image, Shift shift) {
  if (image.rank() != 3) throw DimensionError("shift_image: expected [C x H x W], got " + shape_string(image.shape()));
  const long height = static_cast<long>(image.dim(1));
  const long width = static_cast<long>(image.dim(2));
  if (std::abs(shift.dx) > width || std::abs(shift.dy) > height) {
    throw ContractError("shift (" + std::to_string(shift.dx) + ", " + std::to_string(shift.dy) +
                        ") exceeds image extent " + shape_string(image.shape()));
  }
  return roll2d(image, shift.dx, shift.dy);
}

PatchGrid embedding_grid(std::size_t height, std::size_t width, const EmbedGeometry& g) {
  if (g.patch_size == 0 || g.kernel == 0) throw ConfigError("patch size and kernel must be positive");
  if (height % g.patch_size != 0 || width % g.patch_size != 0) {
    throw ConfigError("image " + std::to_string(height) + "x" + std::to_string(width) +
                      " is not divisible by patch size " + std::to_string(g.patch_size));
  }
  if (height + 2 * g.padding < g.kernel || width + 2 * g.padding < g.kernel) {
    throw ConfigError("embedding kernel larger than the padded image");
  }
  PatchGrid grid{(height + 2 * g.padding - g.kernel) / g.patch_size + 1,
                 (width + 2 * g.padding - g.kernel) / g.patch_size + 1};
  if (grid.rows != height / g.patch_size || grid.cols != width / g.patch_size) {
    throw ConfigError("kernel " + std::to_string(g.kernel) + ", stride " + std::to_string(g.patch_size) +
                      ", padding " + std::to_string(g.padding) + " does not tile the image into " +
                      std::to_string(height / g.patch_size) + "x" + std::to_string(width / g.patch_size) +
                      " patches");
  }
  return grid;
}

template <typename T>
VariantEmbedding<T> embed_variants(const Tensor<T>& image, const ShiftSpec& spec,
                                   std::span<const ConvParams<T>> convs, const EmbedGeometry& geometry) {
  if (image.rank() != 3) {
    throw DimensionError("embed_variants: expected [C x H x W], got " + shape_string(image.shape()));
  }
  const std::size_t expected_convs = geometry.conv_variations ? spec.size() : 1;
  if (convs.size() != expected_convs) {
    throw ConfigError("embed_variants: " + std::to_string(convs.size()) + " convolutions for " +
                      std::to_string(spec.size()) + " variants");
  }
  const PatchGrid grid = embedding_grid(image.dim(1), image.dim(2), geometry);
  const Conv2dOptions options{geometry.patch_size, geometry.padding, PadMode::kZero};

  std::vector<Tensor<T>> variants;
  variants.reserve(spec.size());
  for (std::size_t s = 0; s < spec.size(); ++s) {
    const Shift shift = spec[s];
    Tensor<T> shifted;
    if (geometry.conv_variations) {
      shifted = shift_image(image, shift);
    } else {
      shifted = translate_reflect(image, shift.dx, shift.dy);
    }
    const auto& conv = convs[geometry.conv_variations ? s : 0];
    Tensor<T> features = conv2d(shifted, conv.weight, conv.bias, options);
    const std::size_t width = features.dim(0);
    variants.push_back(transpose(reshape(features, {width, grid.tokens()})));
  }
  return {stack<T>(variants), grid};
}

template <typename T>
VariantEmbedding<T> add_positional(const VariantEmbedding<T>& embedding, const PositionalTable<T>& positional) {
  const Shape& tokens = embedding.tokens.shape();
  const Shape& table = positional.table.shape();
  const std::size_t expected_rows = positional.mode == PositionalMode::kShared ? 1 : tokens[0];
  if (table.size() != 3 || table[0] != expected_rows || table[1] != tokens[1] || table[2] != tokens[2]) {
    throw ConfigError("positional table " + shape_string(table) + " (" + std::string(to_string(positional.mode)) +
                      ") does not fit embedding " + shape_string(tokens));
  }
  return {add(embedding.tokens, positional.table), embedding.grid};
}

template <typename T>
ShiftEmbedding<T>::ShiftEmbedding(ShiftSpec spec, const EmbedGeometry& geometry, PositionalMode mode,
                                  std::size_t channels, std::size_t height, std::size_t width,
                                  std::size_t embed_width, ParameterStore<T>& store, Initializer& init,
                                  const std::string& prefix)
    : spec_(std::move(spec)), geometry_(geometry), grid_(embedding_grid(height, width, geometry)) {
  const std::size_t count = geometry.conv_variations ? spec_.size() : 1;
  const std::size_t fan_in = channels * geometry.kernel * geometry.kernel;
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (std::size_t s = 0; s < count; ++s) {
    const std::string name = prefix + ".conv" + std::to_string(s);
    ConvParams<T> conv;
    conv.weight = store.add(name + ".weight",
                            init.uniform<T>({embed_width, channels, geometry.kernel, geometry.kernel}, bound), true);
    conv.bias = store.add(name + ".bias", init.uniform<T>({embed_width}, bound), true);
    convs_.push_back(std::move(conv));
  }
  const std::size_t rows = mode == PositionalMode::kShared ? 1 : spec_.size();
  positional_.mode = mode;
  positional_.table =
      store.add(prefix + ".pos", init.truncated_normal<T>({rows, grid_.tokens(), embed_width}, kInitStd), false);
}

template <typename T>
VariantEmbedding<T> ShiftEmbedding<T>::operator()(const Tensor<T>& image) const {
  return add_positional(embed_variants<T>(image, spec_, convs_, geometry_), positional_);
}

#define LSAT_INSTANTIATE_SHIFT(T)                                                                    \
  template Tensor<T> shift_image(const Tensor<T>&, Shift);                                           \
  template VariantEmbedding<T> embed_variants(const Tensor<T>&, const ShiftSpec&,                    \
                                              std::span<const ConvParams<T>>, const EmbedGeometry&); \
  template VariantEmbedding<T> add_positional(const VariantEmbedding<T>&, const PositionalTable<T>&); \
  template class ShiftEmbedding<T>;

LSAT_INSTANTIATE_SHIFT(float)
LSAT_INSTANTIATE_SHIFT(double)

}  // namespace lsat
