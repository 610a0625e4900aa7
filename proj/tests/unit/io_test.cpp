// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "lsat/checkpoint.hpp"
#include "lsat/config_io.hpp"
#include "lsat/error.hpp"
#include "lsat/training.hpp"
#include "oracles.hpp"

using namespace lsat;
namespace fs = std::filesystem;
using lsat::testing::random_tensor;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

}  // namespace

TEST_SUITE("config_io") {
  TEST_CASE("model and train configs round trip") {
    lsat::testing::WarningCapture quiet;
    for (const auto& name : preset_names()) {
      ModelConfig c = preset(name);
      CHECK(model_config_from_json(model_config_to_json(c)) == c);
    }
    ModelConfig m = lsat::testing::micro_config();
    m.positional = PositionalMode::kShared;
    m.embed.conv_variations = false;
    CHECK(model_config_from_json(model_config_to_json(m)) == m);

    TrainConfig t;
    t.base_lr = 1e-3;
    t.seed = 99;
    t.subset = 5000;
    t.augment = false;
    CHECK(train_config_from_json(train_config_to_json(t)) == t);

    RunConfig run{m, t, "cifar100"};
    RunConfig back = run_config_from_json(run_config_to_json(run));
    CHECK(back.model == m);
    CHECK(back.train == t);
    CHECK(back.dataset == "cifar100");
  }

  TEST_CASE("presets can be overridden field by field") {
    RunConfig run = run_config_from_json(R"({"model": {"preset": "toy", "classes": 4, "shifts": [[0,0],[2,-1]]},
                                             "train": {"epochs": 3}})");
    CHECK(run.model.name == "toy");
    CHECK(run.model.classes == 4);
    CHECK(run.model.shifts.size() == 2);
    CHECK(run.model.shifts[1] == Shift{2, -1});
    CHECK(run.train.epochs == 3);
    CHECK(run.train.batch_size == TrainConfig{}.batch_size);
    CHECK(run_config_from_json("{}").model == preset("cifar-tiny"));
  }

  TEST_CASE("unknown keys, bad values and bad JSON are configuration errors") {
    CHECK_THROWS_AS(run_config_from_json(R"({"modle": {}})"), ConfigError);
    CHECK_THROWS_AS(model_config_from_json(R"({"embed_widht": 3})"), ConfigError);
    CHECK_THROWS_AS(model_config_from_json(R"({"stages": [{"width": 8, "head": 2}]})"), ConfigError);
    CHECK_THROWS_AS(model_config_from_json(R"({"classes": "ten"})"), ConfigError);
    CHECK_THROWS_AS(model_config_from_json(R"({"shifts": [[1]]})"), ConfigError);
    CHECK_THROWS_AS(model_config_from_json(R"({"preset": "nope"})"), ConfigError);
    CHECK_THROWS_AS(train_config_from_json(R"({"lr": 1})"), ConfigError);
    CHECK_THROWS_AS(train_config_from_json("{"), ConfigError);
    CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);
  }
}

TEST_SUITE("checkpoint") {
  TEST_CASE("save then load reproduces forward outputs and optimizer state bitwise") {
    fs::path dir = lsat::testing::scratch_dir("ckpt_roundtrip");
    lsat::testing::WarningCapture quiet;
    Model<float> model(preset("toy"), 3);
    TrainConfig c;
    AdamW<float> opt(model.parameters(), c);
    std::mt19937_64 rng(3);
    Tensor<float> x = random_tensor<float>({3, 3, 8, 8}, rng);
    std::vector<int> labels{1, 2, 3};
    for (int i = 0; i < 2; ++i) train_step(model, x, labels, opt, 1e-3, c);

    ChannelStats stats{{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}};
    save_checkpoint(dir / "m.ckpt", model, &opt.state(), {2, 17, stats, c});
    Checkpoint<float> back = load_checkpoint<float>(dir / "m.ckpt");

    CHECK(back.model.config() == model.config());
    CHECK(back.meta.epoch == 2);
    CHECK(back.meta.schedule_step == 17);
    CHECK(back.meta.stats == stats);
    CHECK(back.meta.train == c);
    REQUIRE(back.optimizer);
    CHECK(back.optimizer->step == 2);
    CHECK(back.optimizer->first == opt.state().first);
    CHECK(back.optimizer->second == opt.state().second);

    NoGradGuard guard;
    Tensor<float> a = model.forward(x), b = back.model.forward(x);
    CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin(), b.data().end()));

    save_checkpoint(dir / "again.ckpt", back.model, &*back.optimizer, back.meta);
    CHECK(slurp(dir / "m.ckpt") == slurp(dir / "again.ckpt"));
    fs::remove_all(dir);
  }

  TEST_CASE("weights-only checkpoints load without optimizer state") {
    fs::path dir = lsat::testing::scratch_dir("ckpt_weights");
    Model<double> model(lsat::testing::micro_config(), 4);
    save_checkpoint<double>(dir / "w.ckpt", model, nullptr, {});
    Checkpoint<double> back = load_checkpoint<double>(dir / "w.ckpt");
    CHECK_FALSE(back.optimizer);
    CHECK_FALSE(back.meta.stats);
    CHECK(count_params(back.model) == count_params(model));
    fs::remove_all(dir);
  }

  TEST_CASE("corrupt files are rejected with a format error") {
    fs::path dir = lsat::testing::scratch_dir("ckpt_corrupt");
    Model<float> model(lsat::testing::micro_config(), 5);
    save_checkpoint<float>(dir / "good.ckpt", model, nullptr, {});
    const std::string good = slurp(dir / "good.ckpt");
    fs::path bad = dir / "bad.ckpt";

    CHECK_THROWS_AS(load_checkpoint<float>(dir / "absent.ckpt"), FormatError);

    spit(bad, "NOTACKPT" + good.substr(8));
    CHECK_THROWS_AS(load_checkpoint<float>(bad), FormatError);

    std::string version = good;
    version[8] = 7;
    spit(bad, version);
    CHECK_THROWS_AS(load_checkpoint<float>(bad), FormatError);

    spit(bad, good.substr(0, 30));
    CHECK_THROWS_AS(load_checkpoint<float>(bad), FormatError);

    spit(bad, good.substr(0, good.size() - 8));
    CHECK_THROWS_AS(load_checkpoint<float>(bad), FormatError);

    std::string manifest = good;
    std::size_t at = manifest.find("\"embed_width\":8");
    REQUIRE(at != std::string::npos);
    manifest[at + 14] = '9';
    spit(bad, manifest);
    CHECK_THROWS_AS(load_checkpoint<float>(bad), FormatError);

    std::string garbled = good;
    garbled[21] = '}';
    spit(bad, garbled);
    CHECK_THROWS_AS(load_checkpoint<float>(bad), FormatError);

    CHECK_THROWS_AS(load_checkpoint<double>(dir / "good.ckpt"), FormatError);
    fs::remove_all(dir);
  }
}
