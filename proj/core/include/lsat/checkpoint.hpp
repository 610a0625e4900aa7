// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "lsat/cifar.hpp"
#include "lsat/model.hpp"
#include "lsat/training.hpp"

namespace lsat {

// File layout: "LSATCKPT", u32 format version, u64 manifest length, the JSON
// manifest, then raw little-endian scalars. The manifest maps each tensor
// name to its shape and element offset in the payload.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::size_t epoch = 0;
  std::size_t schedule_step = 0;
  std::optional<ChannelStats> stats;  // input normalization used in training
  std::optional<TrainConfig> train;
};

template <typename T>
struct Checkpoint {
  Model<T> model;
  std::optional<AdamWState<T>> optimizer;
  CheckpointMeta meta;
};

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const Model<T>& model, const AdamWState<T>* optimizer,
                     const CheckpointMeta& meta);

// Throws FormatError on a bad magic, unsupported version, dtype mismatch,
// truncated payload, or a manifest that disagrees with the model config.
template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace lsat
