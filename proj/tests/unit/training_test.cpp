// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "fixtures.hpp"
#include "lsat/error.hpp"
#include "lsat/ops.hpp"
#include "lsat/training.hpp"
#include "oracles.hpp"

using namespace lsat;
using lsat::testing::random_tensor;

namespace {

TrainConfig plain_config() {
  TrainConfig c;
  c.weight_decay = 0.0;
  c.augment = false;
  return c;
}

template <typename T>
double loss_of(const Model<T>& model, const Tensor<T>& images, std::span<const int> labels) {
  NoGradGuard guard;
  return cross_entropy(model.forward(images), labels).item();
}

template <typename T>
std::vector<std::vector<T>> snapshot(const Model<T>& model) {
  std::vector<std::vector<T>> out;
  for (const auto& p : model.parameters().entries()) out.emplace_back(p.value.data().begin(), p.value.data().end());
  return out;
}

}  // namespace

TEST_SUITE("schedule") {
  TEST_CASE("linear warmup then cosine decay") {
    TrainConfig c;
    LrSchedule s = LrSchedule::from(c, 40);
    CHECK(s.warmup_steps == 200);
    CHECK(s.total_steps == 800);
    CHECK(s(0) == 0.0);
    CHECK(s(100) == doctest::Approx(s.peak / 2));
    CHECK(s(200) == s.peak);
    CHECK(s(500) == doctest::Approx(s.peak / 2));
    CHECK(s(800) == doctest::Approx(0.0).epsilon(1e-12));
    for (std::size_t step = 200; step < 800; ++step) CHECK(s(step + 1) <= s(step));
  }

  TEST_CASE("peak rate scales with the batch size") {
    TrainConfig c;
    CHECK(c.peak_lr() == 5e-4 / 512.0 * 128.0);
    c.batch_size = 512;
    CHECK(c.peak_lr() == 5e-4);
    CHECK(LrSchedule::from(c, 10)(c.warmup_epochs * 10) == 5e-4);
  }

  TEST_CASE("invalid hyperparameters are rejected") {
    TrainConfig c;
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.clip_norm = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.beta2 = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
}

TEST_SUITE("optimizer") {
  TEST_CASE("zero learning rate leaves parameters unchanged") {
    lsat::testing::WarningCapture quiet;
    Model<float> model(preset("toy"), 1);
    auto before = snapshot(model);
    AdamW<float> opt(model.parameters(), TrainConfig{});
    std::mt19937_64 rng(1);
    std::vector<int> labels{3, 7};
    train_step(model, random_tensor<float>({2, 3, 8, 8}, rng), labels, opt, 0.0, TrainConfig{});
    CHECK(snapshot(model) == before);
    CHECK(opt.state().step == 1);
  }

  TEST_CASE("weight decay skips layer norms and positional tables") {
    Model<double> model(lsat::testing::micro_config(), 2);
    auto before = snapshot(model);
    TrainConfig c;
    AdamW<double> opt(model.parameters(), c);
    model.parameters().zero_grad();
    opt.step(0.1);
    const auto& entries = model.parameters().entries();
    std::size_t exempt = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& name = entries[i].name;
      bool no_decay = name.find(".norm") != std::string::npos || name.ends_with(".pos");
      CHECK_MESSAGE(entries[i].decay == !no_decay, name);
      exempt += no_decay;
      double factor = no_decay ? 1.0 : 1.0 - 0.1 * c.weight_decay;
      for (std::size_t j = 0; j < before[i].size(); ++j) {
        REQUIRE(entries[i].value[j] == doctest::Approx(before[i][j] * factor).epsilon(1e-15));
      }
    }
    CHECK(exempt > 0);
  }

  TEST_CASE("state of the wrong layout is rejected") {
    Model<double> model(lsat::testing::micro_config(), 2);
    AdamW<double> opt(model.parameters(), TrainConfig{});
    AdamWState<double> bad = opt.state();
    bad.first.pop_back();
    CHECK_THROWS_AS(opt.load_state(bad), FormatError);
    bad = opt.state();
    bad.second[0].push_back(0.0);
    CHECK_THROWS_AS(opt.load_state(bad), FormatError);
  }

  TEST_CASE("clipping bounds the global norm and reports the original") {
    Model<double> model(lsat::testing::micro_config(), 3);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0.0, 10.0);
    double sq = 0.0;
    for (auto& p : model.parameters().entries()) {
      for (double& g : p.value.mutable_grad()) {
        g = normal(rng);
        sq += g * g;
      }
    }
    double reported = clip_grad_norm(model.parameters(), 5.0);
    CHECK(reported == doctest::Approx(std::sqrt(sq)));
    CHECK(global_grad_norm(model.parameters()) <= 5.0 + 1e-6);
    CHECK(global_grad_norm(model.parameters()) == doctest::Approx(5.0));

    double small = clip_grad_norm(model.parameters(), 100.0);
    CHECK(global_grad_norm(model.parameters()) == small);
  }
}

TEST_SUITE("train_step") {
  TEST_CASE("duplicated rows give the loss of the single row") {
    Model<double> model(lsat::testing::micro_config(), 4);
    std::mt19937_64 rng(4);
    Tensor<double> x = random_tensor<double>({1, 2, 4, 4}, rng);
    std::vector<Tensor<double>> parts{x, x};
    std::vector<int> one{1}, two{1, 1};
    TrainConfig c = plain_config();
    AdamW<double> opt(model.parameters(), c);
    double single = train_step(model, x, one, opt, 0.0, c).loss;
    double pair = train_step(model, concat<double>(parts), two, opt, 0.0, c).loss;
    CHECK(pair == single);
  }

  TEST_CASE("a small step descends on a two-sample problem") {
    Model<double> model(lsat::testing::micro_config(), 5);
    std::mt19937_64 rng(5);
    Tensor<double> x = random_tensor<double>({2, 2, 4, 4}, rng);
    std::vector<int> labels{0, 2};
    TrainConfig c = plain_config();
    AdamW<double> opt(model.parameters(), c);
    double before = loss_of(model, x, labels);
    StepResult r = train_step(model, x, labels, opt, 1e-4, c);
    CHECK(r.loss == doctest::Approx(before).epsilon(1e-12));
    CHECK(r.grad_norm > 0.0);
    CHECK(loss_of(model, x, labels) < before);
  }

  TEST_CASE("micro-batch accumulation matches one large batch") {
    std::mt19937_64 rng(6);
    Tensor<double> x = random_tensor<double>({4, 2, 4, 4}, rng);
    std::vector<int> labels{0, 1, 2, 0};
    TrainConfig whole = plain_config();
    whole.micro_batch = 4;
    TrainConfig split = whole;
    split.micro_batch = 3;
    Model<double> a(lsat::testing::micro_config(), 6), b(lsat::testing::micro_config(), 6);
    AdamW<double> oa(a.parameters(), whole), ob(b.parameters(), split);
    StepResult ra = train_step(a, x, labels, oa, 0.0, whole);
    StepResult rb = train_step(b, x, labels, ob, 0.0, split);
    CHECK(ra.loss == doctest::Approx(rb.loss).epsilon(1e-12));
    CHECK(ra.grad_norm == doctest::Approx(rb.grad_norm).epsilon(1e-12));
    for (std::size_t i = 0; i < a.parameters().entries().size(); ++i) {
      auto ga = a.parameters().entries()[i].value.grad();
      auto gb = b.parameters().entries()[i].value.grad();
      for (std::size_t j = 0; j < ga.size(); ++j) REQUIRE(ga[j] == doctest::Approx(gb[j]).epsilon(1e-9));
    }
  }

  TEST_CASE("non-finite inputs abort the step") {
    Model<float> model(lsat::testing::small_cifar_config(), 7);
    Tensor<float> x({1, 3, 32, 32});
    x.mutable_data()[5] = std::numeric_limits<float>::quiet_NaN();
    std::vector<int> labels{0};
    TrainConfig c = plain_config();
    AdamW<float> opt(model.parameters(), c);
    CHECK_THROWS_AS(train_step(model, x, labels, opt, 1e-3, c), NumericError);
  }

  TEST_CASE("label count must match the batch") {
    Model<float> model(lsat::testing::small_cifar_config(), 7);
    std::vector<int> labels{0, 1};
    TrainConfig c = plain_config();
    AdamW<float> opt(model.parameters(), c);
    CHECK_THROWS_AS(train_step(model, Tensor<float>({1, 3, 32, 32}), labels, opt, 1e-3, c), ContractError);
  }

  TEST_CASE("a small model memorizes sixteen images") {
    Dataset data = lsat::testing::synthetic_dataset(16, 10, 8);
    Model<float> model(lsat::testing::small_cifar_config(), 8);
    TrainConfig c = plain_config();
    c.micro_batch = 16;
    AdamW<float> opt(model.parameters(), c);
    std::vector<std::size_t> ids(16);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    Tensor<float> images = data.batch<float>(ids);
    double loss = 0.0;
    std::size_t steps = 0;
    for (; steps < 200; ++steps) {
      loss = train_step(model, images, data.labels, opt, 3e-3, c).loss;
      if (loss < 0.1) break;
    }
    MESSAGE("memorized to loss " << loss << " in " << steps << " steps");
    CHECK(loss < 0.1);
    NoGradGuard guard;
    CHECK(top1_accuracy(model.forward(images), data.labels) == 1.0);
  }
}

TEST_SUITE("evaluate") {
  TEST_CASE("oracle logits score perfectly and constant logits score chance") {
    std::vector<int> labels;
    for (int i = 0; i < 50; ++i) labels.push_back(i % 10);
    Tensor<float> oracle({50, 10});
    for (std::size_t i = 0; i < 50; ++i) oracle.mutable_data()[i * 10 + labels[i]] = 1.0f;
    CHECK(top1_accuracy(oracle, labels) == 1.0);
    CHECK(top1_accuracy(Tensor<float>::full({50, 10}, 0.3f), labels) == doctest::Approx(0.1));
  }

  TEST_CASE("evaluation is deterministic and independent of the batch size") {
    Dataset data = lsat::testing::synthetic_dataset(20, 10, 9);
    Model<float> model(lsat::testing::small_cifar_config(), 9);
    double a = evaluate(model, data, 7);
    CHECK(a == evaluate(model, data, 7));
    CHECK(a == evaluate(model, data, 20));
  }
}

TEST_SUITE("trainer") {
  TEST_CASE("fixed seed gives bitwise identical loss curves") {
    Dataset train = lsat::testing::synthetic_dataset(24, 10, 10);
    Dataset test = lsat::testing::synthetic_dataset(10, 10, 11);
    TrainConfig c;
    c.batch_size = 8;
    c.micro_batch = 4;
    c.epochs = 3;
    c.warmup_epochs = 1;
    c.seed = 12;
    auto run = [&] {
      Model<float> model(lsat::testing::small_cifar_config(), c.seed);
      Trainer trainer(model, c, train.size());
      std::vector<double> curve;
      for (std::size_t e = 0; e < c.epochs; ++e) {
        EpochMetrics m = trainer.run_epoch(train, &test);
        curve.push_back(m.train_loss);
        curve.push_back(m.test_accuracy);
        curve.push_back(m.lr);
      }
      CHECK(trainer.global_step() == 9);
      return curve;
    };
    std::vector<double> first = run();
    CHECK(first == run());
  }

  TEST_CASE("augmentation flips and shifts with zero fill") {
    std::vector<float> image(kCifarPixels);
    std::iota(image.begin(), image.end(), 1.0f);
    std::mt19937_64 rng(13);
    std::size_t flips = 0, identity = 0;
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<float> out = image;
      augment_image(out, rng);
      bool any_flip = false, same = out == image;
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] == 0.0f) continue;
        std::size_t src = static_cast<std::size_t>(out[i]) - 1;
        REQUIRE(src / 1024 == i / 1024);  // channel preserved
        std::size_t y = (i % 1024) / 32, sy = (src % 1024) / 32;
        REQUIRE((y > sy ? y - sy : sy - y) <= 4);
        if (i % 32 != 31 && out[i + 1] != 0.0f) any_flip = out[i + 1] < out[i];
      }
      flips += any_flip;
      identity += same;
    }
    CHECK(flips > 60);
    CHECK(flips < 140);
    CHECK(identity < 40);
  }
}
