// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <memory>
#include <utility>
#include <vector>

#include "lsat/error.hpp"
#include "lsat/tensor.hpp"

namespace lsat::detail {

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using StridedMap = Eigen::Map<RowMatrix<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStridedMap = Eigen::Map<const RowMatrix<T>, 0, Eigen::OuterStride<>>;

// Wraps freshly computed values into a graph node. The backward closure is
// kept only when grad mode is on and some input requires grad.
template <typename T, typename Backward>
Tensor<T> make_result(const char* op, Shape shape, Buffer<T> data,
                      std::vector<NodePtr<T>> inputs, Backward&& backward) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  bool needs_grad = grad_enabled() &&
                    std::any_of(inputs.begin(), inputs.end(),
                                [](const NodePtr<T>& in) { return in && in->requires_grad; });
  if (needs_grad) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::forward<Backward>(backward);
  }
  return Tensor<T>::from_node(std::move(node));
}

// Grad buffer of `input` to accumulate into, or nullptr if it needs none.
template <typename T>
T* grad_target(const NodePtr<T>& input) {
  if (!input || !input->requires_grad) return nullptr;
  return input->grad_buffer().data();
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw DimensionError(message);
}

}  // namespace lsat::detail
