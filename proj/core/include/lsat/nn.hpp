// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "lsat/tensor.hpp"

namespace lsat {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  bool decay = true;  // subject to decoupled weight decay
};

// Ordered registry of trainable tensors. Registration order is stable and
// defines checkpoint and optimizer layout.
template <typename T>
class ParameterStore {
 public:
  // Registers `value` as a leaf requiring grad; names must be unique.
  Tensor<T> add(std::string name, Tensor<T> value, bool decay);

  const std::vector<Parameter<T>>& entries() const { return entries_; }
  std::vector<Parameter<T>>& entries() { return entries_; }
  bool contains(const std::string& name) const { return index_.contains(name); }
  const Parameter<T>& at(const std::string& name) const;

  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::vector<Parameter<T>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Seeded source of initial parameter values. Draws are made in double and
// rounded to T, so float and double models built from one seed agree.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : engine_(seed) {}

  // Normal(0, std) resampled until within two standard deviations.
  template <typename T>
  Tensor<T> truncated_normal(Shape shape, double stddev);

  template <typename T>
  Tensor<T> uniform(Shape shape, double bound);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

template <typename T>
struct LayerNormParams {
  Tensor<T> gain;
  Tensor<T> bias;
};

// Two-layer perceptron D -> hidden -> D with GELU.
template <typename T>
struct FeedForward {
  Tensor<T> w1, b1, w2, b2;
};

template <typename T>
LayerNormParams<T> make_layer_norm(ParameterStore<T>& store, const std::string& prefix, std::size_t width);

template <typename T>
FeedForward<T> make_feed_forward(ParameterStore<T>& store, Initializer& init, const std::string& prefix,
                                 std::size_t width, std::size_t hidden);

// Linear weight [in x out] from a 0.02-std truncated normal, zero bias.
template <typename T>
Tensor<T> make_linear_weight(ParameterStore<T>& store, Initializer& init, const std::string& name,
                             std::size_t in, std::size_t out);

template <typename T>
Tensor<T> make_zero_bias(ParameterStore<T>& store, const std::string& name, std::size_t width);

template <typename T>
Tensor<T> apply_layer_norm(const Tensor<T>& x, const LayerNormParams<T>& norm);

template <typename T>
Tensor<T> apply_feed_forward(const Tensor<T>& x, const FeedForward<T>& ffn);

inline constexpr std::size_t kFeedForwardRatio = 4;
inline constexpr double kLayerNormEps = 1e-6;
inline constexpr double kInitStd = 0.02;

}  // namespace lsat
