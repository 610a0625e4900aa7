// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lsat/tensor.hpp"

namespace lsat {

enum class Split { kTrain, kTest };
enum class CifarKind { kCifar10, kCifar100 };

std::string_view to_string(Split split);
CifarKind cifar_kind_from_string(std::string_view text);

inline constexpr std::size_t kCifarSide = 32;
inline constexpr std::size_t kCifarPixels = 3 * kCifarSide * kCifarSide;

// Per-channel mean and standard deviation of pixel values scaled to [0, 1].
struct ChannelStats {
  std::array<double, 3> mean{};
  std::array<double, 3> stddev{1.0, 1.0, 1.0};
  friend bool operator==(const ChannelStats&, const ChannelStats&) = default;
};

// Normalized images [N x 3 x 32 x 32] with integer labels.
struct Dataset {
  std::vector<float> pixels;
  std::vector<int> labels;
  std::size_t classes = 10;
  ChannelStats stats;
  Split split = Split::kTrain;

  std::size_t size() const { return labels.size(); }
  std::span<const float> image_values(std::size_t index) const {
    return std::span<const float>(pixels).subspan(index * kCifarPixels, kCifarPixels);
  }
  template <typename T>
  Tensor<T> image(std::size_t index) const;
  template <typename T>
  Tensor<T> batch(std::span<const std::size_t> indices) const;
  // The first `count` samples (all of them when count is 0 or too large).
  Dataset head(std::size_t count) const;
};

// Statistics of raw records (label bytes followed by 3072 channel-planar
// pixel bytes).
ChannelStats compute_channel_stats(std::span<const std::uint8_t> records, std::size_t label_bytes);

// Loads a split from the standard binary distribution: data_batch_1..5.bin /
// test_batch.bin for CIFAR-10, train.bin / test.bin for CIFAR-100 (fine
// labels). `dir` may also be the parent of cifar-10-batches-bin or
// cifar-100-binary. Images are normalized with `stats`, or with statistics of
// the train split when omitted. Throws FormatError with the byte offset of
// the first bad record.
Dataset load_cifar(const std::filesystem::path& dir, Split split, CifarKind kind = CifarKind::kCifar10,
                   std::optional<ChannelStats> stats = std::nullopt);

// Writes records in the CIFAR-10 binary layout; `pixels` holds 3072 bytes per
// label.
void write_cifar_file(const std::filesystem::path& path, std::span<const int> labels,
                      std::span<const std::uint8_t> pixels);

}  // namespace lsat
