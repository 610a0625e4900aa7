// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>

#include "fixtures.hpp"
#include "lsat/cifar.hpp"
#include "lsat/error.hpp"

using namespace lsat;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const FormatError& e) {
    return e.what();
  }
  return {};
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_SUITE("cifar") {
  TEST_CASE("train and test splits parse with labels in range") {
    fs::path dir = lsat::testing::scratch_dir("cifar_splits");
    lsat::testing::write_synthetic_cifar(dir, 12, 1);
    Dataset train = load_cifar(dir, Split::kTrain);
    Dataset test = load_cifar(dir, Split::kTest, CifarKind::kCifar10, train.stats);
    CHECK(train.size() == 60);
    CHECK(test.size() == 12);
    CHECK(train.split == Split::kTrain);
    CHECK(test.split == Split::kTest);
    for (int label : train.labels) CHECK((label >= 0 && label < 10));
    CHECK(train.pixels.size() == 60 * kCifarPixels);
    CHECK(test.stats == train.stats);
    CHECK(load_cifar(dir, Split::kTest).stats == train.stats);
    fs::remove_all(dir);
  }

  TEST_CASE("training split is normalized per channel") {
    fs::path dir = lsat::testing::scratch_dir("cifar_norm");
    lsat::testing::write_synthetic_cifar(dir, 8, 2);
    Dataset train = load_cifar(dir, Split::kTrain);
    const std::size_t plane = 1024;
    for (std::size_t c = 0; c < 3; ++c) {
      double sum = 0.0, sq = 0.0;
      for (std::size_t r = 0; r < train.size(); ++r) {
        for (std::size_t i = 0; i < plane; ++i) {
          double v = train.pixels[r * kCifarPixels + c * plane + i];
          sum += v;
          sq += v * v;
        }
      }
      double n = static_cast<double>(train.size() * plane);
      CHECK(sum / n == doctest::Approx(0.0).epsilon(1e-5));
      CHECK(sq / n == doctest::Approx(1.0).epsilon(1e-4));
    }
    fs::remove_all(dir);
  }

  TEST_CASE("an all-zero record parses to a constant image") {
    fs::path dir = lsat::testing::scratch_dir("cifar_zero");
    lsat::testing::write_synthetic_cifar(dir, 4, 3);
    std::vector<int> labels{0};
    std::vector<std::uint8_t> zeros(kCifarPixels, 0);
    write_cifar_file(dir / "test_batch.bin", labels, zeros);
    Dataset test = load_cifar(dir, Split::kTest);
    REQUIRE(test.size() == 1);
    CHECK(test.labels[0] == 0);
    for (std::size_t c = 0; c < 3; ++c) {
      float expected = static_cast<float>(-test.stats.mean[c] / test.stats.stddev[c]);
      for (std::size_t i = 0; i < 1024; ++i) REQUIRE(test.pixels[c * 1024 + i] == expected);
    }
    Tensor<float> image = test.image<float>(0);
    CHECK(image.shape() == Shape{3, 32, 32});
    fs::remove_all(dir);
  }

  TEST_CASE("truncated files report the byte offset") {
    fs::path dir = lsat::testing::scratch_dir("cifar_trunc");
    lsat::testing::write_synthetic_cifar(dir, 3, 4);
    fs::resize_file(dir / "data_batch_2.bin", 2 * 3073 + 100);
    std::string message = error_of([&] { load_cifar(dir, Split::kTrain); });
    CHECK(message.find("data_batch_2.bin") != std::string::npos);
    CHECK(message.find("byte offset 6146") != std::string::npos);
    fs::remove_all(dir);
  }

  TEST_CASE("out-of-range labels report the byte offset") {
    fs::path dir = lsat::testing::scratch_dir("cifar_label");
    lsat::testing::write_synthetic_cifar(dir, 3, 5);
    std::vector<int> labels{1, 10};
    std::vector<std::uint8_t> pixels(2 * kCifarPixels, 7);
    write_cifar_file(dir / "test_batch.bin", labels, pixels);
    std::string message = error_of([&] { load_cifar(dir, Split::kTest); });
    CHECK(message.find("label 10") != std::string::npos);
    CHECK(message.find("byte offset 3073") != std::string::npos);
    fs::remove_all(dir);
  }

  TEST_CASE("missing files and unknown datasets are errors") {
    fs::path dir = lsat::testing::scratch_dir("cifar_missing");
    CHECK_THROWS_AS(load_cifar(dir, Split::kTrain), FormatError);
    CHECK_THROWS_AS(cifar_kind_from_string("mnist"), ConfigError);
    CHECK(cifar_kind_from_string("cifar-100") == CifarKind::kCifar100);
    fs::remove_all(dir);
  }

  TEST_CASE("the standard nested directory is found") {
    fs::path dir = lsat::testing::scratch_dir("cifar_nested");
    lsat::testing::write_synthetic_cifar(dir / "cifar-10-batches-bin", 2, 6);
    CHECK(load_cifar(dir, Split::kTrain).size() == 10);
    fs::remove_all(dir);
  }

  TEST_CASE("cifar-100 records use the fine label") {
    fs::path dir = lsat::testing::scratch_dir("cifar100");
    std::vector<std::uint8_t> bytes;
    for (int r = 0; r < 3; ++r) {
      bytes.push_back(static_cast<std::uint8_t>(r));           // coarse
      bytes.push_back(static_cast<std::uint8_t>(97 - 40 * r)); // fine
      bytes.insert(bytes.end(), kCifarPixels, static_cast<std::uint8_t>(50 * r));
    }
    write_bytes(dir / "train.bin", bytes);
    write_bytes(dir / "test.bin", bytes);
    Dataset train = load_cifar(dir, Split::kTrain, CifarKind::kCifar100);
    CHECK(train.classes == 100);
    CHECK(train.labels == std::vector<int>{97, 57, 17});
    bytes[1] = 100;
    write_bytes(dir / "test.bin", bytes);
    std::string message = error_of([&] { load_cifar(dir, Split::kTest, CifarKind::kCifar100, train.stats); });
    CHECK(message.find("byte offset 1") != std::string::npos);
    fs::remove_all(dir);
  }

  TEST_CASE("channel statistics match a direct computation") {
    std::vector<std::uint8_t> records;
    for (int r = 0; r < 2; ++r) {
      records.push_back(0);
      for (std::size_t c = 0; c < 3; ++c) records.insert(records.end(), 1024, static_cast<std::uint8_t>(c * 100 + r * 51));
    }
    ChannelStats s = compute_channel_stats(records, 1);
    for (std::size_t c = 0; c < 3; ++c) {
      double a = (c * 100) / 255.0, b = (c * 100 + 51) / 255.0;
      CHECK(s.mean[c] == doctest::Approx((a + b) / 2));
      CHECK(s.stddev[c] == doctest::Approx(std::abs(b - a) / 2));
    }
  }

  TEST_CASE("head keeps the first samples") {
    Dataset d = lsat::testing::synthetic_dataset(10, 10, 7);
    Dataset h = d.head(4);
    CHECK(h.size() == 4);
    CHECK(h.labels == std::vector<int>{0, 1, 2, 3});
    CHECK(std::equal(h.pixels.begin(), h.pixels.end(), d.pixels.begin()));
    CHECK(d.head(0).size() == 10);
    CHECK(d.head(50).size() == 10);
  }
}
