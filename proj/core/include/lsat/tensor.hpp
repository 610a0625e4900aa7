// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace lsat {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

// Cache-line aligned allocator. Vectorized kernels peel a data-dependent
// prefix on unaligned buffers, which changes the summation order; aligning
// every buffer keeps results independent of where they land in memory.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

template <typename T>
using Buffer = std::vector<T, AlignedAllocator<T>>;

namespace detail {

// One vertex of the reverse-mode graph. `backward` reads this node's grad and
// accumulates into the grads of `inputs`; leaves have no backward function.
template <typename T>
struct Node {
  Shape shape;
  Buffer<T> data;
  Buffer<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;
  const char* op = "leaf";

  bool is_leaf() const { return !backward; }
  Buffer<T>& grad_buffer() {
    if (grad.size() != data.size()) grad.assign(data.size(), T{0});
    return grad;
  }
};

}  // namespace detail

// Whether ops executed on this thread record a backward graph.
bool grad_enabled();

// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

struct BackwardOptions {
  // When false, grads of non-leaf tensors are released as soon as they have
  // been propagated. Leaf grads are always kept.
  bool keep_intermediate_grads = true;
};

// Dense row-major tensor with optional gradient tracking.
//
// A Tensor is a cheap handle; copies share the same storage and graph node.
// Values are immutable once an op has produced them. Only leaves (parameters
// and inputs) expose mutable storage, for optimizer updates.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  // Zero-filled tensor.
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);
  Tensor(Shape shape, Buffer<T> values, bool requires_grad = false);
  Tensor(Shape shape, std::initializer_list<T> values, bool requires_grad = false)
      : Tensor(std::move(shape), Buffer<T>(values), requires_grad) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const T> data() const;
  std::span<T> mutable_data();
  T operator[](std::size_t flat_index) const { return data()[flat_index]; }
  T item() const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool is_leaf() const;

  bool has_grad() const;
  // Empty span when no gradient has been accumulated yet.
  std::span<const T> grad() const;
  // Allocates a zero gradient on first use.
  std::span<T> mutable_grad();
  void zero_grad();

  // Reverse-mode sweep from this scalar. Leaf grads accumulate across calls;
  // intermediate grads are recomputed from zero on each call.
  void backward(BackwardOptions options = {}) const;

  // Leaf copy of the values with no graph attached.
  Tensor detach() const;

  const std::shared_ptr<detail::Node<T>>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<detail::Node<T>> node);

 private:
  std::shared_ptr<detail::Node<T>> node_;
};

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& tensor, bool requires_grad = false) {
  std::vector<To> values(tensor.data().begin(), tensor.data().end());
  return Tensor<To>(tensor.shape(), std::move(values), requires_grad);
}

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace lsat
