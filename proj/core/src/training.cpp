// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsat/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "lsat/error.hpp"
#include "lsat/ops.hpp"

namespace lsat {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (micro_batch == 0) throw ConfigError("micro_batch must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (!(base_lr >= 0.0)) throw ConfigError("base_lr must be non-negative");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
}

LrSchedule LrSchedule::from(const TrainConfig& config, std::size_t steps_per_epoch) {
  return {config.peak_lr(), config.warmup_epochs * steps_per_epoch, config.epochs * steps_per_epoch};
}

double LrSchedule::operator()(std::size_t step) const {
  if (step < warmup_steps) return peak * static_cast<double>(step) / static_cast<double>(warmup_steps);
  if (step >= total_steps) return 0.0;
  double progress = static_cast<double>(step - warmup_steps) / static_cast<double>(total_steps - warmup_steps);
  return peak * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

template <typename T>
AdamW<T>::AdamW(ParameterStore<T>& params, const TrainConfig& config)
    : params_(&params),
      beta1_(config.beta1),
      beta2_(config.beta2),
      eps_(config.adam_eps),
      weight_decay_(config.weight_decay) {
  for (const auto& p : params.entries()) {
    state_.first.emplace_back(p.value.numel(), T(0));
    state_.second.emplace_back(p.value.numel(), T(0));
  }
}

template <typename T>
void AdamW<T>::step(double lr) {
  ++state_.step;
  double t = static_cast<double>(state_.step);
  double c1 = 1.0 - std::pow(beta1_, t);
  double c2 = 1.0 - std::pow(beta2_, t);
  auto& entries = params_->entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor<T>& value = entries[i].value;
    std::span<T> w = value.mutable_data();
    std::span<const T> g = value.grad();
    auto& m = state_.first[i];
    auto& v = state_.second[i];
    double decay = entries[i].decay ? lr * weight_decay_ : 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      double gj = g.empty() ? 0.0 : static_cast<double>(g[j]);
      double mj = beta1_ * m[j] + (1.0 - beta1_) * gj;
      double vj = beta2_ * v[j] + (1.0 - beta2_) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      double wj = static_cast<double>(w[j]);
      wj -= decay * wj;
      wj -= lr * (mj / c1) / (std::sqrt(vj / c2) + eps_);
      w[j] = static_cast<T>(wj);
    }
  }
}

template <typename T>
void AdamW<T>::load_state(AdamWState<T> state) {
  const auto& entries = params_->entries();
  if (state.first.size() != entries.size() || state.second.size() != entries.size()) {
    throw FormatError("optimizer state has " + std::to_string(state.first.size()) + " tensors, model has " +
                      std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (state.first[i].size() != entries[i].value.numel() || state.second[i].size() != entries[i].value.numel()) {
      throw FormatError("optimizer state size mismatch for " + entries[i].name);
    }
  }
  state_ = std::move(state);
}

template <typename T>
double global_grad_norm(const ParameterStore<T>& params) {
  double sq = 0.0;
  for (const auto& p : params.entries()) {
    for (T g : p.value.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(sq);
}

template <typename T>
double clip_grad_norm(ParameterStore<T>& params, double max_norm) {
  double norm = global_grad_norm(params);
  if (norm > max_norm) {
    double factor = max_norm / norm;
    for (auto& p : params.entries()) {
      if (!p.value.has_grad()) continue;
      for (T& g : p.value.mutable_grad()) g = static_cast<T>(g * factor);
    }
  }
  return norm;
}

template <typename T>
StepResult train_step(Model<T>& model, const Tensor<T>& images, std::span<const int> labels, AdamW<T>& optimizer,
                      double lr, const TrainConfig& config) {
  if (images.rank() != 4 || images.dim(0) != labels.size()) {
    throw ContractError("train_step: " + shape_string(images.shape()) + " images with " +
                        std::to_string(labels.size()) + " labels");
  }
  std::size_t n = labels.size();
  model.parameters().zero_grad();
  double loss = 0.0;
  for (std::size_t begin = 0; begin < n; begin += config.micro_batch) {
    std::size_t end = std::min(n, begin + config.micro_batch);
    Tensor<T> logits = model.forward(slice(images, begin, end));
    Tensor<T> part = cross_entropy(logits, labels.subspan(begin, end - begin));
    double value = part.item();
    if (!std::isfinite(value)) {
      throw NumericError("non-finite loss in images [" + std::to_string(begin) + ", " + std::to_string(end) + ")");
    }
    double weight = static_cast<double>(end - begin) / static_cast<double>(n);
    loss += value * weight;
    scale(part, static_cast<T>(weight)).backward();
  }
  double norm = clip_grad_norm(model.parameters(), config.clip_norm);
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm");
  optimizer.step(lr);
  return {loss, norm};
}

template <typename T>
double top1_accuracy(const Tensor<T>& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw ContractError("top1_accuracy: " + shape_string(logits.shape()) + " logits with " +
                        std::to_string(labels.size()) + " labels");
  }
  std::size_t classes = logits.dim(1);
  auto data = logits.data();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto row = data.subspan(i * classes, classes);
    auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

template <typename T>
double evaluate(const Model<T>& model, const Dataset& data, std::size_t batch_size) {
  if (data.size() == 0) throw ContractError("evaluate: empty dataset");
  NoGradGuard guard;
  std::size_t correct = 0;
  std::vector<std::size_t> indices;
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    std::size_t end = std::min(data.size(), begin + batch_size);
    indices.resize(end - begin);
    std::iota(indices.begin(), indices.end(), begin);
    Tensor<T> logits = model.forward(data.batch<T>(indices));
    std::span<const int> labels(data.labels.data() + begin, end - begin);
    correct += static_cast<std::size_t>(std::lround(top1_accuracy(logits, labels) * static_cast<double>(end - begin)));
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void augment_image(std::span<float> image, std::mt19937_64& rng) {
  constexpr std::size_t side = kCifarSide;
  constexpr long pad = 4;
  if (image.size() != kCifarPixels) throw ContractError("augment_image expects a 3x32x32 image");
  bool flip = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  long oy = std::uniform_int_distribution<long>(0, 2 * pad)(rng) - pad;
  long ox = std::uniform_int_distribution<long>(0, 2 * pad)(rng) - pad;
  std::vector<float> src(image.begin(), image.end());
  for (std::size_t c = 0; c < 3; ++c) {
    const float* plane = src.data() + c * side * side;
    float* out = image.data() + c * side * side;
    for (std::size_t y = 0; y < side; ++y) {
      for (std::size_t x = 0; x < side; ++x) {
        long sy = static_cast<long>(y) + oy;
        long sx = static_cast<long>(x) + ox;
        if (flip) sx = static_cast<long>(side) - 1 - sx;
        bool inside = sy >= 0 && sy < static_cast<long>(side) && sx >= 0 && sx < static_cast<long>(side);
        out[y * side + x] = inside ? plane[sy * static_cast<long>(side) + sx] : 0.0f;
      }
    }
  }
}

Trainer::Trainer(Model<float>& model, TrainConfig config, std::size_t train_size)
    : model_(&model),
      config_(config),
      steps_per_epoch_((train_size + config.batch_size - 1) / config.batch_size),
      schedule_(LrSchedule::from(config, steps_per_epoch_)),
      optimizer_(model.parameters(), config) {
  config_.validate();
  if (train_size == 0) throw ContractError("Trainer: empty training set");
}

void Trainer::resume(std::size_t epoch, std::size_t step, AdamWState<float> state) {
  optimizer_.load_state(std::move(state));
  epoch_ = epoch;
  step_ = step;
}

EpochMetrics Trainer::run_epoch(const Dataset& train, const Dataset* test) {
  auto start = std::chrono::steady_clock::now();
  std::seed_seq seq{static_cast<std::uint64_t>(config_.seed), static_cast<std::uint64_t>(epoch_)};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  EpochMetrics metrics;
  double loss_sum = 0.0;
  std::size_t seen = 0;
  std::vector<int> labels;
  for (std::size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
    std::size_t end = std::min(order.size(), begin + config_.batch_size);
    std::span<const std::size_t> ids(order.data() + begin, end - begin);
    Tensor<float> images = train.batch<float>(ids);
    if (config_.augment) {
      std::span<float> values = images.mutable_data();
      for (std::size_t i = 0; i < ids.size(); ++i) augment_image(values.subspan(i * kCifarPixels, kCifarPixels), rng);
    }
    labels.resize(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) labels[i] = train.labels[ids[i]];
    double lr = schedule_(step_);
    StepResult result = train_step(*model_, images, labels, optimizer_, lr, config_);
    ++step_;
    metrics.lr = lr;
    loss_sum += result.loss * static_cast<double>(ids.size());
    seen += ids.size();
  }
  ++epoch_;
  metrics.epoch = epoch_;
  metrics.train_loss = loss_sum / static_cast<double>(seen);
  metrics.test_accuracy = test ? evaluate(*model_, *test) : -1.0;
  metrics.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return metrics;
}

template class AdamW<float>;
template class AdamW<double>;
template double global_grad_norm(const ParameterStore<float>&);
template double global_grad_norm(const ParameterStore<double>&);
template double clip_grad_norm(ParameterStore<float>&, double);
template double clip_grad_norm(ParameterStore<double>&, double);
template StepResult train_step(Model<float>&, const Tensor<float>&, std::span<const int>, AdamW<float>&, double,
                               const TrainConfig&);
template StepResult train_step(Model<double>&, const Tensor<double>&, std::span<const int>, AdamW<double>&, double,
                               const TrainConfig&);
template double top1_accuracy(const Tensor<float>&, std::span<const int>);
template double top1_accuracy(const Tensor<double>&, std::span<const int>);
template double evaluate(const Model<float>&, const Dataset&, std::size_t);
template double evaluate(const Model<double>&, const Dataset&, std::size_t);

}  // namespace lsat
