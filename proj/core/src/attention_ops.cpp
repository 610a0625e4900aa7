// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsat/attention_ops.hpp"

#include <cmath>
#include <string>

#include "autograd_impl.hpp"
#include "lsat/op_counter.hpp"

namespace lsat {

using detail::ConstStridedMap;
using detail::grad_target;
using detail::make_result;
using detail::Node;
using detail::require;
using detail::RowMatrix;
using detail::StridedMap;

template <typename T>
LocalAttentionResult<T> local_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                        std::size_t heads) {
  require(q.rank() == 2 && k.rank() == 3 && k.shape() == v.shape() && k.dim(0) == q.dim(0) &&
              k.dim(2) == q.dim(1),
          "local_attention: q " + shape_string(q.shape()) + ", k " + shape_string(k.shape()) + ", v " +
              shape_string(v.shape()));
  const std::size_t patches = q.dim(0), variants = k.dim(1), width = q.dim(1);
  require(heads >= 1 && width % heads == 0,
          "local_attention: width " + std::to_string(width) + " not divisible by " + std::to_string(heads) +
              " heads");
  const std::size_t head_width = width / heads;
  const T scale = T(1) / std::sqrt(T(head_width));
  auto qv = q.data();
  auto kv = k.data();
  auto vv = v.data();

  Buffer<T> pooled(patches * width, T(0));
  Buffer<T> weights(patches * heads * variants);
  for (std::size_t i = 0; i < patches; ++i) {
    for (std::size_t h = 0; h < heads; ++h) {
      const T* qi = qv.data() + i * width + h * head_width;
      T* w = weights.data() + (i * heads + h) * variants;
      T peak = -std::numeric_limits<T>::infinity();
      for (std::size_t t = 0; t < variants; ++t) {
        const T* kt = kv.data() + (i * variants + t) * width + h * head_width;
        T s = 0;
        for (std::size_t j = 0; j < head_width; ++j) s += qi[j] * kt[j];
        w[t] = s * scale;
        peak = std::max(peak, w[t]);
      }
      T total = 0;
      for (std::size_t t = 0; t < variants; ++t) {
        w[t] = std::exp(w[t] - peak);
        total += w[t];
      }
      T* out = pooled.data() + i * width + h * head_width;
      for (std::size_t t = 0; t < variants; ++t) {
        w[t] /= total;
        const T* vt = vv.data() + (i * variants + t) * width + h * head_width;
        for (std::size_t j = 0; j < head_width; ++j) out[j] += w[t] * vt[j];
      }
    }
  }
  {
    OpTagScope tag(kLocalAttentionTag);
    count_mul_adds(2 * patches * variants * width);
  }

  Tensor<T> weight_tensor({patches, heads, variants}, weights);
  Tensor<T> result = make_result<T>(
      "local_attention", {patches, width}, std::move(pooled), {q.node(), k.node(), v.node()},
      [patches, variants, width, heads, head_width, scale, weights = std::move(weights)](Node<T>& self) {
        const auto& qn = self.inputs[0];
        const auto& kn = self.inputs[1];
        const auto& vn = self.inputs[2];
        T* gq = grad_target(qn);
        T* gk = grad_target(kn);
        T* gv = grad_target(vn);
        Buffer<T> dw(variants);
        for (std::size_t i = 0; i < patches; ++i) {
          for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t col = h * head_width;
            const T* dout = self.grad.data() + i * width + col;
            const T* w = weights.data() + (i * heads + h) * variants;
            T weighted = 0;
            for (std::size_t t = 0; t < variants; ++t) {
              const std::size_t row = (i * variants + t) * width + col;
              T d = 0;
              for (std::size_t j = 0; j < head_width; ++j) d += dout[j] * vn->data[row + j];
              dw[t] = d;
              weighted += w[t] * d;
              if (gv) {
                for (std::size_t j = 0; j < head_width; ++j) gv[row + j] += w[t] * dout[j];
              }
            }
            const T* qi = qn->data.data() + i * width + col;
            for (std::size_t t = 0; t < variants; ++t) {
              const T ds = w[t] * (dw[t] - weighted) * scale;
              const std::size_t row = (i * variants + t) * width + col;
              if (gq) {
                for (std::size_t j = 0; j < head_width; ++j) gq[i * width + col + j] += ds * kn->data[row + j];
              }
              if (gk) {
                for (std::size_t j = 0; j < head_width; ++j) gk[row + j] += ds * qi[j];
              }
            }
          }
        }
      });
  return {std::move(result), std::move(weight_tensor)};
}

template <typename T>
Tensor<T> variant_block(const Tensor<T>& kv, std::size_t variants, std::size_t patches, std::size_t column,
                        std::size_t width) {
  require(kv.rank() == 2 && kv.dim(0) == variants * patches && column + width <= kv.dim(1),
          "variant_block: cannot take " + std::to_string(variants) + "x" + std::to_string(patches) +
              " blocks of width " + std::to_string(width) + " at column " + std::to_string(column) + " from " +
              shape_string(kv.shape()));
  const std::size_t stride = kv.dim(1);
  auto src = kv.data();
  Buffer<T> out(patches * variants * width);
  for (std::size_t b = 0; b < patches; ++b) {
    for (std::size_t t = 0; t < variants; ++t) {
      const T* from = src.data() + (t * patches + b) * stride + column;
      std::copy(from, from + width, out.begin() + (b * variants + t) * width);
    }
  }
  return make_result<T>("variant_block", {patches, variants, width}, std::move(out), {kv.node()},
                        [variants, patches, column, width, stride](Node<T>& self) {
                          T* g = grad_target(self.inputs[0]);
                          if (!g) return;
                          for (std::size_t b = 0; b < patches; ++b) {
                            for (std::size_t t = 0; t < variants; ++t) {
                              T* to = g + (t * patches + b) * stride + column;
                              const T* from = self.grad.data() + (b * variants + t) * width;
                              for (std::size_t j = 0; j < width; ++j) to[j] += from[j];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> self_attention(const Tensor<T>& qkv, std::size_t heads) {
  require(qkv.rank() == 2 && qkv.dim(1) % 3 == 0,
          "self_attention: expected [B x 3D] projection, got " + shape_string(qkv.shape()));
  const std::size_t tokens = qkv.dim(0), width = qkv.dim(1) / 3;
  require(heads >= 1 && width % heads == 0,
          "self_attention: width " + std::to_string(width) + " not divisible by " + std::to_string(heads) +
              " heads");
  const std::size_t head_width = width / heads;
  const std::size_t stride = 3 * width;
  const T scale = T(1) / std::sqrt(T(head_width));
  const T* base = qkv.data().data();

  Buffer<T> out(tokens * width);
  Buffer<T> probs(heads * tokens * tokens);
  for (std::size_t h = 0; h < heads; ++h) {
    ConstStridedMap<T> qh(base + h * head_width, tokens, head_width, Eigen::OuterStride<>(stride));
    ConstStridedMap<T> kh(base + width + h * head_width, tokens, head_width, Eigen::OuterStride<>(stride));
    ConstStridedMap<T> vh(base + 2 * width + h * head_width, tokens, head_width, Eigen::OuterStride<>(stride));
    detail::MatMap<T> p(probs.data() + h * tokens * tokens, tokens, tokens);
    p.noalias() = (qh * kh.transpose()) * scale;
    for (std::size_t r = 0; r < tokens; ++r) {
      auto row = p.row(r);
      row = (row.array() - row.maxCoeff()).exp();
      row /= row.sum();
    }
    StridedMap<T>(out.data() + h * head_width, tokens, head_width, Eigen::OuterStride<>(width)).noalias() =
        p * vh;
  }
  {
    OpTagScope tag(kGlobalAttentionTag);
    count_mul_adds(2 * tokens * tokens * width);
  }

  return make_result<T>(
      "self_attention", {tokens, width}, std::move(out), {qkv.node()},
      [tokens, width, heads, head_width, stride, scale, probs = std::move(probs)](Node<T>& self) {
        T* g = grad_target(self.inputs[0]);
        if (!g) return;
        const T* base = self.inputs[0]->data.data();
        RowMatrix<T> dp(tokens, tokens);
        for (std::size_t h = 0; h < heads; ++h) {
          const std::size_t col = h * head_width;
          ConstStridedMap<T> qh(base + col, tokens, head_width, Eigen::OuterStride<>(stride));
          ConstStridedMap<T> kh(base + width + col, tokens, head_width, Eigen::OuterStride<>(stride));
          ConstStridedMap<T> vh(base + 2 * width + col, tokens, head_width, Eigen::OuterStride<>(stride));
          StridedMap<T> gq(g + col, tokens, head_width, Eigen::OuterStride<>(stride));
          StridedMap<T> gk(g + width + col, tokens, head_width, Eigen::OuterStride<>(stride));
          StridedMap<T> gv(g + 2 * width + col, tokens, head_width, Eigen::OuterStride<>(stride));
          ConstStridedMap<T> dout(self.grad.data() + col, tokens, head_width, Eigen::OuterStride<>(width));
          detail::ConstMatMap<T> p(probs.data() + h * tokens * tokens, tokens, tokens);

          gv.noalias() += p.transpose() * dout;
          dp.noalias() = dout * vh.transpose();
          for (std::size_t r = 0; r < tokens; ++r) {
            T dot = p.row(r).dot(dp.row(r));
            dp.row(r) = (p.row(r).array() * (dp.row(r).array() - dot)) * scale;
          }
          gq.noalias() += dp * kh;
          gk.noalias() += dp.transpose() * qh;
        }
      });
}

#define LSAT_INSTANTIATE_ATTENTION(T)                                                                         \
  template LocalAttentionResult<T> local_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                                                   std::size_t);                                             \
  template Tensor<T> variant_block(const Tensor<T>&, std::size_t, std::size_t, std::size_t, std::size_t); \
  template Tensor<T> self_attention(const Tensor<T>&, std::size_t);

LSAT_INSTANTIATE_ATTENTION(float)
LSAT_INSTANTIATE_ATTENTION(double)

}  // namespace lsat
