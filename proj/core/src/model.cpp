// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsat/model.hpp"

#include <cmath>

#include "lsat/error.hpp"
#include "lsat/log.hpp"
#include "lsat/ops.hpp"

namespace lsat {
namespace {

PatchGrid halve(PatchGrid g) { return {(g.rows + 1) / 2, (g.cols + 1) / 2}; }

std::vector<StageSpec> uniform_stages(std::size_t width, std::size_t heads, std::vector<std::size_t> repeats) {
  std::vector<StageSpec> stages;
  for (std::size_t i = 0; i < repeats.size(); ++i) {
    stages.push_back({width, heads, repeats[i], i + 1 < repeats.size()});
  }
  return stages;
}

ModelConfig cifar_base_config(std::string name, std::size_t width, std::size_t heads,
                              std::vector<std::size_t> repeats) {
  ModelConfig c;
  c.name = std::move(name);
  c.height = c.width = 32;
  c.embed = {1, 3, 1, true};
  c.embed_width = width;
  c.local_heads = heads;
  c.shifts = default_shift_set("cifar");
  c.stages = uniform_stages(width, heads, std::move(repeats));
  c.classes = 10;
  return c;
}

// Module bucket for the parameter report.
std::string group_of(const std::string& name) {
  if (name.starts_with("embed.conv")) return "embed.conv";
  auto first = name.find('.');
  std::string head = name.substr(0, first);
  if (head.starts_with("stage")) {
    return name.compare(first + 1, 4, "down") == 0 ? head + ".down" : head + ".blocks";
  }
  if (head == "embed") return name.substr(0, name.find('.', first + 1));
  return head;
}

}  // namespace

PatchGrid ModelConfig::stage1_grid() const { return embedding_grid(height, width, embed); }

std::vector<PatchGrid> ModelConfig::stage_grids() const {
  std::vector<PatchGrid> grids;
  PatchGrid g = stage1_grid();
  for (const auto& stage : stages) {
    grids.push_back(g);
    if (stage.downsample) g = halve(g);
  }
  return grids;
}

void ModelConfig::validate() const {
  if (channels == 0 || height == 0 || width == 0) throw ConfigError("input extents must be positive");
  if (classes == 0) throw ConfigError("classes must be positive");
  if (embed_width == 0 || local_heads == 0 || embed_width % local_heads != 0) {
    throw ConfigError("embedding width " + std::to_string(embed_width) + " not divisible by " +
                      std::to_string(local_heads) + " local heads");
  }
  const PatchGrid grid = stage1_grid();
  std::size_t current = embed_width;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    const std::string label = "stage " + std::to_string(i + 1);
    if (s.width == 0 || s.heads == 0 || s.width % s.heads != 0) {
      throw ConfigError(label + ": width " + std::to_string(s.width) + " not divisible by " +
                        std::to_string(s.heads) + " heads");
    }
    if (s.repeats == 0) throw ConfigError(label + ": repeats must be at least 1");
    if (s.width != current) {
      throw ConfigError(label + ": width " + std::to_string(s.width) + " does not match incoming width " +
                        std::to_string(current));
    }
    if (s.downsample && i + 1 == stages.size()) {
      throw ConfigError(label + ": the final stage ends in average pooling, not a downsample");
    }
    if (s.downsample) current = stages[i + 1].width;
  }
  if (drop_path != 0.0 || dropout != 0.0) warn("drop_path/dropout are accepted but not applied");

  const double root = std::sqrt(static_cast<double>(grid.tokens()));
  if (static_cast<double>(shifts.size()) > root) {
    warn("T = " + std::to_string(shifts.size()) + " exceeds sqrt(B) = " + std::to_string(root) +
         "; local attention no longer undercuts global attention in cost");
  }
  if (shifts.max_magnitude() > static_cast<int>(embed.patch_size)) {
    warn("shift magnitude " + std::to_string(shifts.max_magnitude()) + " exceeds patch size " +
         std::to_string(embed.patch_size));
  }
}

ModelConfig preset(std::string_view name) {
  if (name == "cifar-tiny") return cifar_base_config("cifar-tiny", 192, 3, {2, 4, 4, 4});
  if (name == "cifar-small") return cifar_base_config("cifar-small", 384, 6, {2, 4, 4, 4});
  if (name == "cifar-base") return cifar_base_config("cifar-base", 768, 12, {3, 3, 3, 3});
  if (name == "imagenet-tiny" || name == "imagenet-small") {
    ModelConfig c;
    c.name = std::string(name);
    c.height = c.width = 224;
    c.shifts = default_shift_set("imagenet");
    c.classes = 1000;
    if (name == "imagenet-tiny") {
      c.embed = {7, 7, 0, true};
      c.embed_width = 192;
      c.local_heads = 4;
      c.stages = uniform_stages(192, 4, {2, 4, 4, 4});
    } else {
      c.embed = {4, 4, 0, true};
      c.embed_width = 64;
      c.local_heads = 2;
      c.stages = {{64, 2, 2, true}, {192, 6, 2, true}, {384, 12, 10, false}};
    }
    return c;
  }
  if (name == "toy") {
    ModelConfig c = cifar_base_config("toy", 16, 2, {2, 4, 4, 4});
    c.height = c.width = 8;
    c.shifts = ShiftSpec({{0, 0}, {1, 0}, {0, 1}});
    return c;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() {
  return {"cifar-tiny", "cifar-small", "cifar-base", "imagenet-tiny", "imagenet-small", "toy"};
}

template <typename T>
Model<T>::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Initializer init(seed);
  embedding_.emplace(config_.shifts, config_.embed, config_.positional, config_.channels, config_.height,
                     config_.width, config_.embed_width, params_, init, "embed");
  local_ = make_local_attn_params(params_, init, "local", config_.embed_width, config_.local_heads);
  std::size_t final_width = config_.embed_width;
  for (std::size_t i = 0; i < config_.stages.size(); ++i) {
    const auto& spec = config_.stages[i];
    const std::string prefix = "stage" + std::to_string(i + 1);
    Stage stage;
    for (std::size_t r = 0; r < spec.repeats; ++r) {
      stage.blocks.push_back(
          make_global_block_params(params_, init, prefix + ".block" + std::to_string(r), spec.width, spec.heads));
    }
    final_width = spec.width;
    if (spec.downsample) {
      const std::size_t next = config_.stages[i + 1].width;
      stage.down = make_downsample_params(params_, init, prefix + ".down", spec.width, next);
    }
    stages_.push_back(std::move(stage));
  }
  head_ = make_classifier_params(params_, init, "head", final_width, config_.classes);
}

template <typename T>
Tensor<T> Model<T>::forward_image(const Tensor<T>& image, ForwardTrace<T>* trace) const {
  const Shape expected{config_.channels, config_.height, config_.width};
  if (image.shape() != expected) {
    throw DimensionError("model expects an image " + shape_string(expected) + ", got " + shape_string(image.shape()));
  }
  VariantEmbedding<T> embedded = (*embedding_)(image);
  LocalAttnOutput<T> local = local_block(embedded, local_);
  Tensor<T> tokens = local.tokens;
  PatchGrid grid = embedded.grid;
  if (trace) {
    trace->stage_grids.clear();
    trace->local_weights = local.weights;
  }
  for (const auto& stage : stages_) {
    if (trace) trace->stage_grids.push_back(grid);
    for (const auto& block : stage.blocks) tokens = global_block(tokens, block);
    if (stage.down) {
      auto next = downsample(tokens, grid, *stage.down);
      tokens = next.tokens;
      grid = next.grid;
    }
  }
  if (trace) trace->final_grid = grid;
  return classifier_head(tokens, head_);
}

template <typename T>
Tensor<T> Model<T>::forward(const Tensor<T>& batch) const {
  const Shape& s = batch.shape();
  if (s.size() != 4 || s[1] != config_.channels || s[2] != config_.height || s[3] != config_.width) {
    throw DimensionError("model expects a batch [N x " + std::to_string(config_.channels) + " x " +
                         std::to_string(config_.height) + " x " + std::to_string(config_.width) + "], got " +
                         shape_string(s));
  }
  std::vector<Tensor<T>> rows;
  rows.reserve(s[0]);
  const Shape image_shape{s[1], s[2], s[3]};
  for (std::size_t n = 0; n < s[0]; ++n) {
    rows.push_back(forward_image(reshape(slice(batch, n, n + 1), image_shape)));
  }
  return stack<T>(rows);
}

template <typename T>
std::vector<ParamReportRow> Model<T>::parameter_report() const {
  std::vector<ParamReportRow> rows;
  for (const auto& p : params_.entries()) {
    std::string group = group_of(p.name);
    if (rows.empty() || rows.back().module != group) rows.push_back({group, 0});
    rows.back().count += p.value.numel();
  }
  return rows;
}

template class Model<float>;
template class Model<double>;

}  // namespace lsat
