// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lsat/global_pyramid.hpp"
#include "lsat/local_attention.hpp"
#include "lsat/nn.hpp"
#include "lsat/shift_embed.hpp"

namespace lsat {

// One pyramid level: `repeats` global blocks of width E_i with H_i heads,
// optionally followed by downsampling into the next stage's width.
struct StageSpec {
  std::size_t width = 0;
  std::size_t heads = 1;
  std::size_t repeats = 1;
  bool downsample = false;
  friend bool operator==(const StageSpec&, const StageSpec&) = default;
};

struct ModelConfig {
  std::string name = "custom";
  std::size_t channels = 3;
  std::size_t height = 32;
  std::size_t width = 32;
  EmbedGeometry embed;
  std::size_t embed_width = 192;  // E_1, also the local block width
  std::size_t local_heads = 3;
  ShiftSpec shifts;
  PositionalMode positional = PositionalMode::kPerVariant;
  std::vector<StageSpec> stages;
  std::size_t classes = 10;
  // Regularization hooks; accepted for configuration parity, not applied.
  double drop_path = 0.0;
  double dropout = 0.0;

  PatchGrid stage1_grid() const;
  // Grid entering each stage.
  std::vector<PatchGrid> stage_grids() const;
  // Throws ConfigError on inconsistent widths, heads or geometry. Emits
  // warnings when T > sqrt(B) or a shift exceeds the patch size.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// cifar-tiny, cifar-small, cifar-base, imagenet-tiny, imagenet-small, and
// toy (cifar-tiny reduced to D=16, 8x8 input, T=3) for gradient checking.
ModelConfig preset(std::string_view name);
std::vector<std::string> preset_names();

template <typename T>
struct ForwardTrace {
  std::vector<PatchGrid> stage_grids;  // grid entering each global stage
  PatchGrid final_grid;
  Tensor<T> local_weights;
};

struct ParamReportRow {
  std::string module;
  std::size_t count = 0;
};

template <typename T>
class Model {
 public:
  Model(ModelConfig config, std::uint64_t seed);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  // batch [N x C x H x W] -> logits [N x classes]. Rows are independent.
  Tensor<T> forward(const Tensor<T>& batch) const;
  // image [C x H x W] -> logits [classes].
  Tensor<T> forward_image(const Tensor<T>& image, ForwardTrace<T>* trace = nullptr) const;

  const ModelConfig& config() const { return config_; }
  ParameterStore<T>& parameters() { return params_; }
  const ParameterStore<T>& parameters() const { return params_; }

  const ShiftEmbedding<T>& embedding() const { return *embedding_; }
  const LocalAttnParams<T>& local() const { return local_; }

  // Trainable scalars grouped by module, in registration order.
  std::vector<ParamReportRow> parameter_report() const;

 private:
  struct Stage {
    std::vector<GlobalBlockParams<T>> blocks;
    std::optional<DownsampleParams<T>> down;
  };

  ModelConfig config_;
  ParameterStore<T> params_;
  std::optional<ShiftEmbedding<T>> embedding_;
  LocalAttnParams<T> local_;
  std::vector<Stage> stages_;
  ClassifierParams<T> head_;
};

template <typename T>
std::size_t count_params(const Model<T>& model) {
  return model.parameters().scalar_count();
}

extern template class Model<float>;
extern template class Model<double>;

}  // namespace lsat
