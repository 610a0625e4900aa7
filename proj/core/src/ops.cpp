// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsat/ops.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "autograd_impl.hpp"
#include "lsat/op_counter.hpp"

namespace lsat {

using detail::ConstMatMap;
using detail::grad_target;
using detail::make_result;
using detail::MatMap;
using detail::Node;
using detail::require;

namespace {

std::string shapes(const char* op, const Shape& a, const Shape& b) {
  return std::string(op) + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b);
}

// Index into [0, n) after a signed offset, wrapping circularly.
inline std::size_t wrap(long i, long n) {
  long r = i % n;
  return static_cast<std::size_t>(r < 0 ? r + n : r);
}

inline std::size_t reflect(long i, long n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return static_cast<std::size_t>(i);
}

template <typename T>
void check_finite(std::span<const T> values, const char* op) {
  for (T v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite input");
  }
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0), shapes("matmul", a.shape(), b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Buffer<T> out(m * n);
  MatMap<T>(out.data(), m, n).noalias() =
      ConstMatMap<T>(a.data().data(), m, k) * ConstMatMap<T>(b.data().data(), k, n);
  count_mul_adds(m * k * n);
  return make_result<T>("matmul", {m, n}, std::move(out), {a.node(), b.node()}, [m, k, n](Node<T>& self) {
    const auto& an = self.inputs[0];
    const auto& bn = self.inputs[1];
    ConstMatMap<T> g(self.grad.data(), m, n);
    if (T* ga = grad_target(an)) {
      MatMap<T>(ga, m, k).noalias() += g * ConstMatMap<T>(bn->data.data(), k, n).transpose();
    }
    if (T* gb = grad_target(bn)) {
      MatMap<T>(gb, k, n).noalias() += ConstMatMap<T>(an->data.data(), m, k).transpose() * g;
    }
  });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require(x.rank() == 2 && weight.rank() == 2 && x.dim(1) == weight.dim(0),
          shapes("linear", x.shape(), weight.shape()));
  const std::size_t m = x.dim(0), k = x.dim(1), n = weight.dim(1);
  const bool has_bias = bias.defined();
  if (has_bias) require(bias.numel() == n, shapes("linear bias", weight.shape(), bias.shape()));
  Buffer<T> out(m * n);
  MatMap<T> y(out.data(), m, n);
  y.noalias() = ConstMatMap<T>(x.data().data(), m, k) * ConstMatMap<T>(weight.data().data(), k, n);
  if (has_bias) y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.data().data(), n);
  count_mul_adds(m * k * n);
  return make_result<T>(
      "linear", {m, n}, std::move(out), {x.node(), weight.node(), has_bias ? bias.node() : nullptr},
      [m, k, n](Node<T>& self) {
        const auto& xn = self.inputs[0];
        const auto& wn = self.inputs[1];
        ConstMatMap<T> g(self.grad.data(), m, n);
        if (T* gx = grad_target(xn)) {
          MatMap<T>(gx, m, k).noalias() += g * ConstMatMap<T>(wn->data.data(), k, n).transpose();
        }
        if (T* gw = grad_target(wn)) {
          MatMap<T>(gw, k, n).noalias() += ConstMatMap<T>(xn->data.data(), m, k).transpose() * g;
        }
        if (T* gb = grad_target(self.inputs[2])) {
          MatMap<T>(gb, 1, n) += g.colwise().sum();
        }
      });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  bool tiled = false;
  if (sa != sb) {
    bool trailing = sb.size() <= sa.size() && std::equal(sb.begin(), sb.end(), sa.end() - sb.size());
    bool leading_one = sb.size() == sa.size() && !sb.empty() && sb[0] == 1 &&
                       std::equal(sb.begin() + 1, sb.end(), sa.begin() + 1);
    require(trailing || leading_one, shapes("add", sa, sb));
    tiled = true;
  }
  const std::size_t n = a.numel();
  const std::size_t tile = b.numel();
  auto av = a.data();
  auto bv = b.data();
  Buffer<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = av[i] + bv[tiled ? i % tile : i];
  return make_result<T>("add", sa, std::move(out), {a.node(), b.node()}, [n, tile](Node<T>& self) {
    if (T* ga = grad_target(self.inputs[0])) {
      for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[i];
    }
    if (T* gb = grad_target(self.inputs[1])) {
      for (std::size_t i = 0; i < n; ++i) gb[i % tile] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(), shapes("mul", a.shape(), b.shape()));
  const std::size_t n = a.numel();
  Buffer<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
  return make_result<T>("mul", a.shape(), std::move(out), {a.node(), b.node()}, [n](Node<T>& self) {
    const auto& an = self.inputs[0];
    const auto& bn = self.inputs[1];
    if (T* ga = grad_target(an)) {
      for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[i] * bn->data[i];
    }
    if (T* gb = grad_target(bn)) {
      for (std::size_t i = 0; i < n; ++i) gb[i] += self.grad[i] * an->data[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  const std::size_t n = a.numel();
  Buffer<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * factor;
  return make_result<T>("scale", a.shape(), std::move(out), {a.node()}, [n, factor](Node<T>& self) {
    if (T* ga = grad_target(self.inputs[0])) {
      for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[i] * factor;
    }
  });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  const std::size_t n = x.numel();
  const T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  auto xv = x.data();
  Buffer<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = T(0.5) * xv[i] * (T(1) + std::erf(xv[i] * inv_sqrt2));
  return make_result<T>("gelu", x.shape(), std::move(out), {x.node()}, [n, inv_sqrt2](Node<T>& self) {
    const auto& xn = self.inputs[0];
    T* gx = grad_target(xn);
    if (!gx) return;
    const T inv_sqrt_2pi = std::numbers::inv_sqrtpi_v<T> * inv_sqrt2;
    for (std::size_t i = 0; i < n; ++i) {
      T v = xn->data[i];
      T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
      T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
      gx[i] += self.grad[i] * (cdf + v * pdf);
    }
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  require(x.rank() >= 1, "layer_norm: scalar input");
  const std::size_t width = x.shape().back();
  require(gain.numel() == width && bias.numel() == width, shapes("layer_norm", x.shape(), gain.shape()));
  const std::size_t rows = x.numel() / width;
  auto xv = x.data();
  auto gv = gain.data();
  auto bv = bias.data();
  Buffer<T> out(x.numel());
  Buffer<T> normalized(x.numel());
  Buffer<T> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xv.data() + r * width;
    T mu = 0;
    for (std::size_t j = 0; j < width; ++j) mu += row[j];
    mu /= T(width);
    T var = 0;
    for (std::size_t j = 0; j < width; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= T(width);
    T rstd = T(1) / std::sqrt(var + eps);
    inv_std[r] = rstd;
    for (std::size_t j = 0; j < width; ++j) {
      T h = (row[j] - mu) * rstd;
      normalized[r * width + j] = h;
      out[r * width + j] = h * gv[j] + bv[j];
    }
  }
  return make_result<T>(
      "layer_norm", x.shape(), std::move(out), {x.node(), gain.node(), bias.node()},
      [rows, width, normalized = std::move(normalized), inv_std = std::move(inv_std)](Node<T>& self) {
        T* gx = grad_target(self.inputs[0]);
        T* gg = grad_target(self.inputs[1]);
        T* gb = grad_target(self.inputs[2]);
        const auto& gain_values = self.inputs[1]->data;
        for (std::size_t r = 0; r < rows; ++r) {
          const T* dy = self.grad.data() + r * width;
          const T* h = normalized.data() + r * width;
          if (gg || gb) {
            for (std::size_t j = 0; j < width; ++j) {
              if (gg) gg[j] += dy[j] * h[j];
              if (gb) gb[j] += dy[j];
            }
          }
          if (gx) {
            T mean_dh = 0, mean_dh_h = 0;
            for (std::size_t j = 0; j < width; ++j) {
              T dh = dy[j] * gain_values[j];
              mean_dh += dh;
              mean_dh_h += dh * h[j];
            }
            mean_dh /= T(width);
            mean_dh_h /= T(width);
            for (std::size_t j = 0; j < width; ++j) {
              T dh = dy[j] * gain_values[j];
              gx[r * width + j] += inv_std[r] * (dh - mean_dh - h[j] * mean_dh_h);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis) {
  const Shape& s = x.shape();
  const int rank = static_cast<int>(s.size());
  if (axis < 0) axis += rank;
  require(axis >= 0 && axis < rank, "softmax: axis out of range for " + shape_string(s));
  check_finite(x.data(), "softmax");
  std::size_t outer = 1, inner = 1;
  const std::size_t n = s[axis];
  for (int i = 0; i < axis; ++i) outer *= s[i];
  for (int i = axis + 1; i < rank; ++i) inner *= s[i];
  auto xv = x.data();
  Buffer<T> out(x.numel());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      T peak = -std::numeric_limits<T>::infinity();
      for (std::size_t j = 0; j < n; ++j) peak = std::max(peak, xv[base + j * inner]);
      T total = 0;
      for (std::size_t j = 0; j < n; ++j) {
        T e = std::exp(xv[base + j * inner] - peak);
        out[base + j * inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < n; ++j) out[base + j * inner] /= total;
    }
  }
  return make_result<T>("softmax", s, out, {x.node()}, [outer, inner, n, y = out](Node<T>& self) {
    T* gx = grad_target(self.inputs[0]);
    if (!gx) return;
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * n * inner + in;
        T dot = 0;
        for (std::size_t j = 0; j < n; ++j) dot += self.grad[base + j * inner] * y[base + j * inner];
        for (std::size_t j = 0; j < n; ++j) {
          gx[base + j * inner] += y[base + j * inner] * (self.grad[base + j * inner] - dot);
        }
      }
    }
  });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, Conv2dOptions options) {
  require(x.rank() == 3, "conv2d: input must be [C x H x W], got " + shape_string(x.shape()));
  require(weight.rank() == 4 && weight.dim(2) == weight.dim(3) && weight.dim(1) == x.dim(0),
          shapes("conv2d", x.shape(), weight.shape()));
  require(options.stride >= 1, "conv2d: stride must be positive");
  const std::size_t channels = x.dim(0), height = x.dim(1), width = x.dim(2);
  const std::size_t out_channels = weight.dim(0), kernel = weight.dim(2);
  const std::size_t pad = options.padding, stride = options.stride;
  require(height + 2 * pad >= kernel && width + 2 * pad >= kernel,
          "conv2d: kernel " + std::to_string(kernel) + " larger than padded input " + shape_string(x.shape()));
  const bool has_bias = bias.defined();
  if (has_bias) require(bias.numel() == out_channels, shapes("conv2d bias", weight.shape(), bias.shape()));
  const std::size_t out_h = (height + 2 * pad - kernel) / stride + 1;
  const std::size_t out_w = (width + 2 * pad - kernel) / stride + 1;
  const std::size_t patch = channels * kernel * kernel;
  const std::size_t positions = out_h * out_w;
  const bool circular = options.pad_mode == PadMode::kCircular;

  // Column index for every (patch element, output position); -1 marks zero padding.
  std::vector<long> source(patch * positions);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ky = 0; ky < kernel; ++ky) {
      for (std::size_t kx = 0; kx < kernel; ++kx) {
        const std::size_t row = (c * kernel + ky) * kernel + kx;
        for (std::size_t oy = 0; oy < out_h; ++oy) {
          long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
          for (std::size_t ox = 0; ox < out_w; ++ox) {
            long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
            long idx = -1;
            if (circular) {
              idx = static_cast<long>((c * height + wrap(iy, height)) * width + wrap(ix, width));
            } else if (iy >= 0 && iy < static_cast<long>(height) && ix >= 0 && ix < static_cast<long>(width)) {
              idx = static_cast<long>((c * height + iy) * width + ix);
            }
            source[row * positions + oy * out_w + ox] = idx;
          }
        }
      }
    }
  }
  auto xv = x.data();
  Buffer<T> columns(patch * positions);
  for (std::size_t i = 0; i < columns.size(); ++i) columns[i] = source[i] < 0 ? T(0) : xv[source[i]];

  Buffer<T> out(out_channels * positions);
  MatMap<T> y(out.data(), out_channels, positions);
  y.noalias() = ConstMatMap<T>(weight.data().data(), out_channels, patch) *
                ConstMatMap<T>(columns.data(), patch, positions);
  if (has_bias) y.colwise() += ConstMatMap<T>(bias.data().data(), out_channels, 1).col(0);
  count_mul_adds(out_channels * patch * positions);

  return make_result<T>(
      "conv2d", {out_channels, out_h, out_w}, std::move(out),
      {x.node(), weight.node(), has_bias ? bias.node() : nullptr},
      [out_channels, patch, positions, columns = std::move(columns), source = std::move(source)](Node<T>& self) {
        ConstMatMap<T> g(self.grad.data(), out_channels, positions);
        if (T* gw = grad_target(self.inputs[1])) {
          MatMap<T>(gw, out_channels, patch).noalias() +=
              g * ConstMatMap<T>(columns.data(), patch, positions).transpose();
        }
        if (T* gb = grad_target(self.inputs[2])) {
          MatMap<T>(gb, out_channels, 1) += g.rowwise().sum();
        }
        if (T* gx = grad_target(self.inputs[0])) {
          detail::RowMatrix<T> dcol =
              ConstMatMap<T>(self.inputs[1]->data.data(), out_channels, patch).transpose() * g;
          const T* d = dcol.data();
          for (std::size_t i = 0; i < source.size(); ++i) {
            if (source[i] >= 0) gx[source[i]] += d[i];
          }
        }
      });
}

template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& x, std::size_t kernel, std::size_t stride, std::size_t padding) {
  require(x.rank() == 3, "max_pool2d: input must be [C x H x W], got " + shape_string(x.shape()));
  require(kernel > padding && stride >= 1, "max_pool2d: padding must be smaller than the kernel");
  const std::size_t channels = x.dim(0), height = x.dim(1), width = x.dim(2);
  require(height + 2 * padding >= kernel && width + 2 * padding >= kernel,
          "max_pool2d: window larger than padded input " + shape_string(x.shape()));
  const std::size_t out_h = (height + 2 * padding - kernel) / stride + 1;
  const std::size_t out_w = (width + 2 * padding - kernel) / stride + 1;
  auto xv = x.data();
  Buffer<T> out(channels * out_h * out_w);
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        T best = -std::numeric_limits<T>::infinity();
        std::size_t best_index = 0;
        bool found = false;
        for (std::size_t ky = 0; ky < kernel; ++ky) {
          long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(padding);
          if (iy < 0 || iy >= static_cast<long>(height)) continue;
          for (std::size_t kx = 0; kx < kernel; ++kx) {
            long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(padding);
            if (ix < 0 || ix >= static_cast<long>(width)) continue;
            std::size_t idx = (c * height + iy) * width + ix;
            if (!found || xv[idx] > best) {
              best = xv[idx];
              best_index = idx;
              found = true;
            }
          }
        }
        std::size_t o = (c * out_h + oy) * out_w + ox;
        out[o] = best;
        argmax[o] = best_index;
      }
    }
  }
  return make_result<T>("max_pool2d", {channels, out_h, out_w}, std::move(out), {x.node()},
                        [argmax = std::move(argmax)](Node<T>& self) {
                          T* gx = grad_target(self.inputs[0]);
                          if (!gx) return;
                          for (std::size_t o = 0; o < argmax.size(); ++o) gx[argmax[o]] += self.grad[o];
                        });
}

namespace {

// Shared body of roll2d / translate_reflect: gathers through an index map.
template <typename T>
Tensor<T> gather_2d(const Tensor<T>& x, const char* op, long dx, long dy, bool circular) {
  require(x.rank() >= 2, std::string(op) + ": need at least two axes, got " + shape_string(x.shape()));
  const std::size_t height = x.dim(x.rank() - 2), width = x.dim(x.rank() - 1);
  const std::size_t planes = x.numel() / (height * width);
  std::vector<std::size_t> source(x.numel());
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t y = 0; y < height; ++y) {
      long sy = static_cast<long>(y) + dy;
      std::size_t ry = circular ? wrap(sy, height) : reflect(sy, height);
      for (std::size_t xx = 0; xx < width; ++xx) {
        long sx = static_cast<long>(xx) + dx;
        std::size_t rx = circular ? wrap(sx, width) : reflect(sx, width);
        source[(p * height + y) * width + xx] = (p * height + ry) * width + rx;
      }
    }
  }
  auto xv = x.data();
  Buffer<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[source[i]];
  return make_result<T>(op, x.shape(), std::move(out), {x.node()}, [source = std::move(source)](Node<T>& self) {
    T* gx = grad_target(self.inputs[0]);
    if (!gx) return;
    for (std::size_t i = 0; i < source.size(); ++i) gx[source[i]] += self.grad[i];
  });
}

}  // namespace

template <typename T>
Tensor<T> roll2d(const Tensor<T>& x, long dx, long dy) {
  return gather_2d(x, "roll2d", dx, dy, true);
}

template <typename T>
Tensor<T> translate_reflect(const Tensor<T>& x, long dx, long dy) {
  return gather_2d(x, "translate_reflect", dx, dy, false);
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  require(shape_numel(shape) == x.numel(), shapes("reshape", x.shape(), shape));
  auto xv = x.data();
  const std::size_t n = x.numel();
  return make_result<T>("reshape", std::move(shape), Buffer<T>(xv.begin(), xv.end()), {x.node()},
                        [n](Node<T>& self) {
                          T* gx = grad_target(self.inputs[0]);
                          if (!gx) return;
                          for (std::size_t i = 0; i < n; ++i) gx[i] += self.grad[i];
                        });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  require(x.rank() == 2, "transpose: need a matrix, got " + shape_string(x.shape()));
  const std::size_t m = x.dim(0), n = x.dim(1);
  Buffer<T> out(m * n);
  MatMap<T>(out.data(), n, m) = ConstMatMap<T>(x.data().data(), m, n).transpose();
  return make_result<T>("transpose", {n, m}, std::move(out), {x.node()}, [m, n](Node<T>& self) {
    if (T* gx = grad_target(self.inputs[0])) {
      MatMap<T>(gx, m, n) += ConstMatMap<T>(self.grad.data(), n, m).transpose();
    }
  });
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t begin, std::size_t end) {
  require(x.rank() >= 1 && begin < end && end <= x.dim(0),
          "slice: rows [" + std::to_string(begin) + ", " + std::to_string(end) + ") out of range for " +
              shape_string(x.shape()));
  const std::size_t row = x.numel() / x.dim(0);
  Shape shape = x.shape();
  shape[0] = end - begin;
  auto xv = x.data();
  Buffer<T> out(xv.begin() + begin * row, xv.begin() + end * row);
  const std::size_t offset = begin * row, count = out.size();
  return make_result<T>("slice", std::move(shape), std::move(out), {x.node()}, [offset, count](Node<T>& self) {
    T* gx = grad_target(self.inputs[0]);
    if (!gx) return;
    for (std::size_t i = 0; i < count; ++i) gx[offset + i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> concat(std::span<const Tensor<T>> parts) {
  require(!parts.empty(), "concat: no inputs");
  Shape shape = parts[0].shape();
  std::size_t rows = 0;
  std::vector<detail::NodePtr<T>> inputs;
  std::vector<std::size_t> sizes;
  for (const auto& p : parts) {
    require(p.rank() == shape.size() && std::equal(shape.begin() + 1, shape.end(), p.shape().begin() + 1),
            shapes("concat", shape, p.shape()));
    rows += p.dim(0);
    inputs.push_back(p.node());
    sizes.push_back(p.numel());
  }
  shape[0] = rows;
  Buffer<T> out;
  out.reserve(shape_numel(shape));
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return make_result<T>("concat", std::move(shape), std::move(out), std::move(inputs),
                        [sizes = std::move(sizes)](Node<T>& self) {
                          std::size_t offset = 0;
                          for (std::size_t i = 0; i < sizes.size(); ++i) {
                            if (T* g = grad_target(self.inputs[i])) {
                              for (std::size_t j = 0; j < sizes[i]; ++j) g[j] += self.grad[offset + j];
                            }
                            offset += sizes[i];
                          }
                        });
}

template <typename T>
Tensor<T> stack(std::span<const Tensor<T>> parts) {
  require(!parts.empty(), "stack: no inputs");
  std::vector<Tensor<T>> rows;
  rows.reserve(parts.size());
  Shape unit = parts[0].shape();
  unit.insert(unit.begin(), 1);
  for (const auto& p : parts) {
    require(p.shape() == parts[0].shape(), shapes("stack", parts[0].shape(), p.shape()));
    rows.push_back(reshape(p, unit));
  }
  return concat<T>(rows);
}

template <typename T>
Tensor<T> mean_rows(const Tensor<T>& x) {
  require(x.rank() >= 1, "mean_rows: scalar input");
  const std::size_t m = x.dim(0), n = x.numel() / m;
  Shape shape(x.shape().begin() + 1, x.shape().end());
  if (shape.empty()) shape = {1};
  Buffer<T> out(n, T(0));
  auto xv = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j] += xv[i * n + j];
  }
  for (auto& v : out) v /= T(m);
  return make_result<T>("mean_rows", std::move(shape), std::move(out), {x.node()}, [m, n](Node<T>& self) {
    T* gx = grad_target(self.inputs[0]);
    if (!gx) return;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += self.grad[j] / T(m);
    }
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total = 0;
  for (T v : x.data()) total += v;
  const std::size_t n = x.numel();
  return make_result<T>("sum", {1}, {total}, {x.node()}, [n](Node<T>& self) {
    T* gx = grad_target(self.inputs[0]);
    if (!gx) return;
    for (std::size_t i = 0; i < n; ++i) gx[i] += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  return scale(sum(x), T(1) / T(x.numel()));
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  require(logits.rank() == 2 && logits.dim(0) == labels.size(),
          "cross_entropy: logits " + shape_string(logits.shape()) + " vs " + std::to_string(labels.size()) +
              " labels");
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw ContractError("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                          std::to_string(classes) + ")");
    }
  }
  auto z = logits.data();
  Buffer<T> probs(rows * classes);
  T loss = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = z.data() + r * classes;
    T peak = *std::max_element(row, row + classes);
    T total = 0;
    for (std::size_t c = 0; c < classes; ++c) total += std::exp(row[c] - peak);
    for (std::size_t c = 0; c < classes; ++c) probs[r * classes + c] = std::exp(row[c] - peak) / total;
    loss += std::log(total) + peak - row[labels[r]];
  }
  loss /= T(rows);
  std::vector<int> targets(labels.begin(), labels.end());
  return make_result<T>("cross_entropy", {1}, {loss}, {logits.node()},
                        [rows, classes, probs = std::move(probs), targets = std::move(targets)](Node<T>& self) {
                          T* g = grad_target(self.inputs[0]);
                          if (!g) return;
                          const T upstream = self.grad[0] / T(rows);
                          for (std::size_t r = 0; r < rows; ++r) {
                            for (std::size_t c = 0; c < classes; ++c) {
                              T target = static_cast<std::size_t>(targets[r]) == c ? T(1) : T(0);
                              g[r * classes + c] += upstream * (probs[r * classes + c] - target);
                            }
                          }
                        });
}

#define LSAT_INSTANTIATE_OPS(T)                                                                  \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> scale(const Tensor<T>&, T);                                                 \
  template Tensor<T> gelu(const Tensor<T>&);                                                     \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);        \
  template Tensor<T> softmax(const Tensor<T>&, int);                                             \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Conv2dOptions); \
  template Tensor<T> max_pool2d(const Tensor<T>&, std::size_t, std::size_t, std::size_t);        \
  template Tensor<T> roll2d(const Tensor<T>&, long, long);                                       \
  template Tensor<T> translate_reflect(const Tensor<T>&, long, long);                            \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                           \
  template Tensor<T> transpose(const Tensor<T>&);                                                \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t);                          \
  template Tensor<T> concat(std::span<const Tensor<T>>);                                         \
  template Tensor<T> stack(std::span<const Tensor<T>>);                                          \
  template Tensor<T> mean_rows(const Tensor<T>&);                                                \
  template Tensor<T> sum(const Tensor<T>&);                                                      \
  template Tensor<T> mean(const Tensor<T>&);                                                     \
  template Tensor<T> cross_entropy(const Tensor<T>&, std::span<const int>);

LSAT_INSTANTIATE_OPS(float)
LSAT_INSTANTIATE_OPS(double)

}  // namespace lsat
