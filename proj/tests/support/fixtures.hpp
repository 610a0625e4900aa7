// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "lsat/cifar.hpp"
#include "lsat/log.hpp"
#include "lsat/model.hpp"

namespace lsat::testing {

// A full pipeline small enough for exhaustive finite differences: 4x4 input,
// two variants, two stages of width 8 (under 5k parameters).
inline ModelConfig micro_config() {
  ModelConfig c;
  c.name = "micro";
  c.channels = 2;
  c.height = c.width = 4;
  c.embed = {1, 3, 1, true};
  c.embed_width = 8;
  c.local_heads = 2;
  c.shifts = ShiftSpec({{0, 0}, {1, 0}});
  c.stages = {{8, 2, 1, true}, {8, 2, 1, false}};
  c.classes = 3;
  return c;
}

// A 32x32 model cheap enough to train inside a unit test.
inline ModelConfig small_cifar_config() {
  ModelConfig c;
  c.name = "cifar-micro";
  c.height = c.width = 32;
  c.embed = {4, 4, 0, true};
  c.embed_width = 16;
  c.local_heads = 2;
  c.shifts = ShiftSpec({{0, 0}, {1, 0}, {0, 1}});
  c.stages = {{16, 2, 1, true}, {16, 2, 1, false}};
  c.classes = 10;
  return c;
}

// Captures warnings for the guard's lifetime.
class WarningCapture {
 public:
  WarningCapture() {
    previous_ = set_warning_sink([this](std::string_view m) { messages.emplace_back(m); });
  }
  ~WarningCapture() { set_warning_sink(previous_); }
  std::vector<std::string> messages;

 private:
  WarningSink previous_;
};

// Writes a synthetic CIFAR-10 binary tree (5 train batches + test batch)
// with `per_batch` random records per file. Labels cycle through 0..9.
inline void write_synthetic_cifar(const std::filesystem::path& dir, std::size_t per_batch, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  auto write = [&](const std::string& name) {
    std::vector<int> labels(per_batch);
    std::vector<std::uint8_t> pixels(per_batch * kCifarPixels);
    for (std::size_t i = 0; i < per_batch; ++i) labels[i] = static_cast<int>(i % 10);
    for (auto& p : pixels) p = static_cast<std::uint8_t>(byte(rng));
    write_cifar_file(dir / name, labels, pixels);
  };
  for (int i = 1; i <= 5; ++i) write("data_batch_" + std::to_string(i) + ".bin");
  write("test_batch.bin");
}

// In-memory dataset of standard-normal images with labels cycling 0..classes-1.
inline Dataset synthetic_dataset(std::size_t n, std::size_t classes, std::uint64_t seed) {
  Dataset d;
  d.classes = classes;
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  d.pixels.resize(n * kCifarPixels);
  for (auto& v : d.pixels) v = normal(rng);
  for (std::size_t i = 0; i < n; ++i) d.labels.push_back(static_cast<int>(i % classes));
  return d;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lsat_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace lsat::testing
