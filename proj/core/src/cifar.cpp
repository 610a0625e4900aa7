// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsat/cifar.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "lsat/error.hpp"

namespace lsat {
namespace {

namespace fs = std::filesystem;

struct Layout {
  std::size_t label_bytes;
  std::size_t label_index;  // which label byte is used
  std::size_t classes;
};

Layout layout_for(CifarKind kind) {
  if (kind == CifarKind::kCifar100) return {2, 1, 100};
  return {1, 0, 10};
}

fs::path resolve_dir(const fs::path& dir, CifarKind kind) {
  const char* nested = kind == CifarKind::kCifar100 ? "cifar-100-binary" : "cifar-10-batches-bin";
  if (fs::is_directory(dir / nested)) return dir / nested;
  return dir;
}

std::vector<fs::path> split_files(const fs::path& dir, Split split, CifarKind kind) {
  if (kind == CifarKind::kCifar100) return {dir / (split == Split::kTrain ? "train.bin" : "test.bin")};
  if (split == Split::kTest) return {dir / "test_batch.bin"};
  std::vector<fs::path> files;
  for (int i = 1; i <= 5; ++i) files.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
  return files;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Reads and validates all records of a split.
std::vector<std::uint8_t> read_split(const fs::path& dir, Split split, CifarKind kind) {
  Layout layout = layout_for(kind);
  std::size_t record = layout.label_bytes + kCifarPixels;
  std::vector<std::uint8_t> all;
  for (const auto& path : split_files(dir, split, kind)) {
    std::vector<std::uint8_t> bytes = read_file(path);
    if (bytes.empty()) throw FormatError(path.string() + ": empty file");
    std::size_t whole = bytes.size() / record;
    if (bytes.size() % record != 0) {
      throw FormatError(path.string() + ": truncated record at byte offset " + std::to_string(whole * record) +
                        " (file size " + std::to_string(bytes.size()) + " is not a multiple of " +
                        std::to_string(record) + ")");
    }
    for (std::size_t r = 0; r < whole; ++r) {
      std::size_t label = bytes[r * record + layout.label_index];
      if (label >= layout.classes) {
        throw FormatError(path.string() + ": label " + std::to_string(label) + " at byte offset " +
                          std::to_string(r * record + layout.label_index) + " is outside [0, " +
                          std::to_string(layout.classes) + ")");
      }
    }
    all.insert(all.end(), bytes.begin(), bytes.end());
  }
  return all;
}

}  // namespace

std::string_view to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

CifarKind cifar_kind_from_string(std::string_view text) {
  if (text == "cifar10" || text == "cifar-10") return CifarKind::kCifar10;
  if (text == "cifar100" || text == "cifar-100") return CifarKind::kCifar100;
  throw ConfigError("unknown dataset '" + std::string(text) + "' (expected cifar10 or cifar100)");
}

ChannelStats compute_channel_stats(std::span<const std::uint8_t> records, std::size_t label_bytes) {
  std::size_t record = label_bytes + kCifarPixels;
  std::size_t count = records.size() / record;
  if (count == 0) throw FormatError("no records to compute statistics from");
  std::size_t plane = kCifarSide * kCifarSide;
  ChannelStats stats;
  for (std::size_t c = 0; c < 3; ++c) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < count; ++r) {
      const std::uint8_t* px = records.data() + r * record + label_bytes + c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        double v = px[i] / 255.0;
        sum += v;
        sq += v * v;
      }
    }
    double n = static_cast<double>(count * plane);
    double mean = sum / n;
    stats.mean[c] = mean;
    stats.stddev[c] = std::sqrt(std::max(sq / n - mean * mean, 1e-12));
  }
  return stats;
}

Dataset load_cifar(const fs::path& dir, Split split, CifarKind kind, std::optional<ChannelStats> stats) {
  fs::path root = resolve_dir(dir, kind);
  Layout layout = layout_for(kind);
  std::size_t record = layout.label_bytes + kCifarPixels;
  std::vector<std::uint8_t> bytes = read_split(root, split, kind);
  if (!stats) {
    stats = split == Split::kTrain ? compute_channel_stats(bytes, layout.label_bytes)
                                   : compute_channel_stats(read_split(root, Split::kTrain, kind), layout.label_bytes);
  }
  Dataset data;
  data.classes = layout.classes;
  data.split = split;
  data.stats = *stats;
  std::size_t count = bytes.size() / record;
  std::size_t plane = kCifarSide * kCifarSide;
  data.labels.resize(count);
  data.pixels.resize(count * kCifarPixels);
  for (std::size_t r = 0; r < count; ++r) {
    const std::uint8_t* rec = bytes.data() + r * record;
    data.labels[r] = rec[layout.label_index];
    float* out = data.pixels.data() + r * kCifarPixels;
    for (std::size_t c = 0; c < 3; ++c) {
      double mean = stats->mean[c], inv = 1.0 / stats->stddev[c];
      for (std::size_t i = 0; i < plane; ++i) {
        out[c * plane + i] = static_cast<float>((rec[layout.label_bytes + c * plane + i] / 255.0 - mean) * inv);
      }
    }
  }
  return data;
}

void write_cifar_file(const fs::path& path, std::span<const int> labels, std::span<const std::uint8_t> pixels) {
  if (pixels.size() != labels.size() * kCifarPixels) {
    throw ContractError("write_cifar_file: expected " + std::to_string(labels.size() * kCifarPixels) +
                        " pixel bytes, got " + std::to_string(pixels.size()));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  for (std::size_t r = 0; r < labels.size(); ++r) {
    char label = static_cast<char>(static_cast<std::uint8_t>(labels[r]));
    out.put(label);
    out.write(reinterpret_cast<const char*>(pixels.data() + r * kCifarPixels), kCifarPixels);
  }
  if (!out) throw FormatError("failed writing " + path.string());
}

template <typename T>
Tensor<T> Dataset::image(std::size_t index) const {
  if (index >= size()) throw ContractError("image index " + std::to_string(index) + " out of range");
  auto values = image_values(index);
  return Tensor<T>({3, kCifarSide, kCifarSide}, std::vector<T>(values.begin(), values.end()));
}

template <typename T>
Tensor<T> Dataset::batch(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw ContractError("empty batch");
  std::vector<T> values;
  values.reserve(indices.size() * kCifarPixels);
  for (std::size_t index : indices) {
    if (index >= size()) throw ContractError("image index " + std::to_string(index) + " out of range");
    auto v = image_values(index);
    values.insert(values.end(), v.begin(), v.end());
  }
  return Tensor<T>({indices.size(), 3, kCifarSide, kCifarSide}, std::move(values));
}

Dataset Dataset::head(std::size_t count) const {
  if (count == 0 || count >= size()) return *this;
  Dataset out;
  out.classes = classes;
  out.stats = stats;
  out.split = split;
  out.labels.assign(labels.begin(), labels.begin() + static_cast<long>(count));
  out.pixels.assign(pixels.begin(), pixels.begin() + static_cast<long>(count * kCifarPixels));
  return out;
}

template Tensor<float> Dataset::image<float>(std::size_t) const;
template Tensor<double> Dataset::image<double>(std::size_t) const;
template Tensor<float> Dataset::batch<float>(std::span<const std::size_t>) const;
template Tensor<double> Dataset::batch<double>(std::span<const std::size_t>) const;

}  // namespace lsat
