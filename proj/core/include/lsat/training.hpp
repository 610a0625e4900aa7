// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "lsat/cifar.hpp"
#include "lsat/model.hpp"

namespace lsat {

struct TrainConfig {
  double base_lr = 5e-4;         // per 512 images
  std::size_t batch_size = 128;  // images per optimizer step
  std::size_t micro_batch = 16;  // images per graph; gradients accumulate
  std::size_t epochs = 20;
  std::size_t warmup_epochs = 5;
  double weight_decay = 0.05;
  double clip_norm = 5.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  std::size_t subset = 0;  // train on the first N samples; 0 means all
  bool augment = true;     // random horizontal flip + 4-pixel pad-and-crop

  // base_lr / 512 * batch_size.
  double peak_lr() const { return base_lr / 512.0 * static_cast<double>(batch_size); }
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Linear warmup from 0 to `peak`, then half-cosine decay to 0 at total_steps.
struct LrSchedule {
  double peak = 0.0;
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 0;

  static LrSchedule from(const TrainConfig& config, std::size_t steps_per_epoch);
  double operator()(std::size_t step) const;
};

template <typename T>
struct AdamWState {
  std::size_t step = 0;
  std::vector<std::vector<T>> first;
  std::vector<std::vector<T>> second;
};

// AdamW with decoupled weight decay, applied only to parameters flagged for
// decay (LayerNorm and positional tables are exempt).
template <typename T>
class AdamW {
 public:
  AdamW(ParameterStore<T>& params, const TrainConfig& config);

  void step(double lr);

  const AdamWState<T>& state() const { return state_; }
  void load_state(AdamWState<T> state);

 private:
  ParameterStore<T>* params_;
  double beta1_, beta2_, eps_, weight_decay_;
  AdamWState<T> state_;
};

template <typename T>
double global_grad_norm(const ParameterStore<T>& params);

// Scales every gradient by max_norm / norm when the global norm exceeds
// max_norm. Returns the norm before clipping.
template <typename T>
double clip_grad_norm(ParameterStore<T>& params, double max_norm);

struct StepResult {
  double loss = 0.0;       // mean cross-entropy over the batch
  double grad_norm = 0.0;  // before clipping
};

// One optimizer step on images [N x C x H x W]: mean cross-entropy, global
// gradient clipping, AdamW update. Raises NumericError on a non-finite loss.
template <typename T>
StepResult train_step(Model<T>& model, const Tensor<T>& images, std::span<const int> labels, AdamW<T>& optimizer,
                      double lr, const TrainConfig& config);

// Fraction of rows whose first maximal logit is the label.
template <typename T>
double top1_accuracy(const Tensor<T>& logits, std::span<const int> labels);

template <typename T>
double evaluate(const Model<T>& model, const Dataset& data, std::size_t batch_size = 64);

// Horizontal flip with probability 1/2, then a random 32x32 crop of the
// image zero-padded by 4 pixels. Operates on normalized values.
void augment_image(std::span<float> image, std::mt19937_64& rng);

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;        // learning rate of the last step in the epoch
  double train_loss = 0.0;
  double test_accuracy = 0.0;  // negative when no test set was given
  double wall_seconds = 0.0;
};

// Epoch-level driver. Shuffling and augmentation draw from an engine seeded by
// (seed, epoch), so runs are reproducible and resumable at epoch boundaries.
class Trainer {
 public:
  Trainer(Model<float>& model, TrainConfig config, std::size_t train_size);

  EpochMetrics run_epoch(const Dataset& train, const Dataset* test);

  std::size_t epoch() const { return epoch_; }
  std::size_t global_step() const { return step_; }
  const LrSchedule& schedule() const { return schedule_; }
  AdamW<float>& optimizer() { return optimizer_; }
  const TrainConfig& config() const { return config_; }

  // Restores the position reached by an earlier run.
  void resume(std::size_t epoch, std::size_t step, AdamWState<float> state);

 private:
  Model<float>* model_;
  TrainConfig config_;
  std::size_t steps_per_epoch_;
  LrSchedule schedule_;
  AdamW<float> optimizer_;
  std::size_t epoch_ = 0;
  std::size_t step_ = 0;
};

}  // namespace lsat
