// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsat/nn.hpp"

#include <cmath>

#include "lsat/error.hpp"
#include "lsat/ops.hpp"

namespace lsat {

template <typename T>
Tensor<T> ParameterStore<T>::add(std::string name, Tensor<T> value, bool decay) {
  if (index_.contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  value.set_requires_grad(true);
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), value, decay});
  return value;
}

template <typename T>
const Parameter<T>& ParameterStore<T>::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return entries_[it->second];
}

template <typename T>
std::size_t ParameterStore<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : entries_) n += p.value.numel();
  return n;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& p : entries_) p.value.zero_grad();
}

template <typename T>
Tensor<T> Initializer::truncated_normal(Shape shape, double stddev) {
  std::normal_distribution<double> normal(0.0, stddev);
  std::vector<T> values(shape_numel(shape));
  for (auto& v : values) {
    double draw;
    do {
      draw = normal(engine_);
    } while (std::abs(draw) > 2.0 * stddev);
    v = static_cast<T>(draw);
  }
  return Tensor<T>(std::move(shape), std::move(values));
}

template <typename T>
Tensor<T> Initializer::uniform(Shape shape, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<T> values(shape_numel(shape));
  for (auto& v : values) v = static_cast<T>(dist(engine_));
  return Tensor<T>(std::move(shape), std::move(values));
}

template <typename T>
LayerNormParams<T> make_layer_norm(ParameterStore<T>& store, const std::string& prefix, std::size_t width) {
  return {store.add(prefix + ".gain", Tensor<T>::full({width}, T(1)), false),
          store.add(prefix + ".bias", Tensor<T>({width}), false)};
}

template <typename T>
Tensor<T> make_linear_weight(ParameterStore<T>& store, Initializer& init, const std::string& name,
                             std::size_t in, std::size_t out) {
  return store.add(name, init.truncated_normal<T>({in, out}, kInitStd), true);
}

template <typename T>
Tensor<T> make_zero_bias(ParameterStore<T>& store, const std::string& name, std::size_t width) {
  return store.add(name, Tensor<T>({width}), true);
}

template <typename T>
FeedForward<T> make_feed_forward(ParameterStore<T>& store, Initializer& init, const std::string& prefix,
                                 std::size_t width, std::size_t hidden) {
  FeedForward<T> ffn;
  ffn.w1 = make_linear_weight(store, init, prefix + ".fc1.weight", width, hidden);
  ffn.b1 = make_zero_bias(store, prefix + ".fc1.bias", hidden);
  ffn.w2 = make_linear_weight(store, init, prefix + ".fc2.weight", hidden, width);
  ffn.b2 = make_zero_bias(store, prefix + ".fc2.bias", width);
  return ffn;
}

template <typename T>
Tensor<T> apply_layer_norm(const Tensor<T>& x, const LayerNormParams<T>& norm) {
  return layer_norm(x, norm.gain, norm.bias, T(kLayerNormEps));
}

template <typename T>
Tensor<T> apply_feed_forward(const Tensor<T>& x, const FeedForward<T>& ffn) {
  return linear(gelu(linear(x, ffn.w1, ffn.b1)), ffn.w2, ffn.b2);
}

template class ParameterStore<float>;
template class ParameterStore<double>;

#define LSAT_INSTANTIATE_NN(T)                                                                              \
  template Tensor<T> Initializer::truncated_normal<T>(Shape, double);                                       \
  template Tensor<T> Initializer::uniform<T>(Shape, double);                                                \
  template LayerNormParams<T> make_layer_norm(ParameterStore<T>&, const std::string&, std::size_t);         \
  template FeedForward<T> make_feed_forward(ParameterStore<T>&, Initializer&, const std::string&,           \
                                            std::size_t, std::size_t);                                      \
  template Tensor<T> make_linear_weight(ParameterStore<T>&, Initializer&, const std::string&, std::size_t, \
                                        std::size_t);                                                       \
  template Tensor<T> make_zero_bias(ParameterStore<T>&, const std::string&, std::size_t);                   \
  template Tensor<T> apply_layer_norm(const Tensor<T>&, const LayerNormParams<T>&);                         \
  template Tensor<T> apply_feed_forward(const Tensor<T>&, const FeedForward<T>&);

LSAT_INSTANTIATE_NN(float)
LSAT_INSTANTIATE_NN(double)

}  // namespace lsat
