// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "fixtures.hpp"
#include "lsat/checkpoint.hpp"
#include "lsat/config_io.hpp"

using namespace lsat;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string field(const std::string& csv_line, std::size_t index) {
  std::istringstream in(csv_line);
  std::string cell;
  for (std::size_t i = 0; i <= index; ++i) std::getline(in, cell, ',');
  return cell;
}

}  // namespace

TEST_CASE("params prints a per-module table and the total") {
  Outcome r = run({"params", "--preset", "toy"});
  CHECK(r.code == 0);
  CHECK(r.out.find("embed.conv") != std::string::npos);
  CHECK(r.out.find("head") != std::string::npos);
  lsat::testing::WarningCapture quiet;
  Model<float> toy(preset("toy"), 0);
  CHECK(r.out.find("total") != std::string::npos);
  CHECK(r.out.find(std::to_string(count_params(toy))) != std::string::npos);
}

TEST_CASE("gradcheck passes on a sampled toy model") {
  Outcome r = run({"gradcheck", "--preset", "toy", "--max-entries", "2"});
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS, max rel err") != std::string::npos);
  CHECK(r.out.find("< 0.001") != std::string::npos);
}

TEST_CASE("bench writes the sweep as CSV") {
  Outcome r = run({"bench", "--B", "4,16", "--T", "2", "--D", "6", "--heads", "2"});
  CHECK(r.code == 0);
  CHECK(r.out.starts_with("B,T,D,"));
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 3);
}

TEST_CASE("bad input exits nonzero with a message") {
  CHECK(run({}).code != 0);
  CHECK(run({"frobnicate"}).code != 0);
  Outcome unknown = run({"params", "--preset", "cifar-huge"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("unknown preset") != std::string::npos);
  CHECK(run({"eval", "--ckpt", "/nonexistent.ckpt", "--data", "/tmp"}).code != 0);
  CHECK(run({"inspect", "--ckpt", "/nonexistent.ckpt"}).code != 0);
  CHECK(run({"train", "--data", "/nonexistent", "--preset", "toy"}).code == 2);

  fs::path dir = lsat::testing::scratch_dir("cli_corrupt");
  std::ofstream(dir / "junk.ckpt") << "not a checkpoint";
  Outcome corrupt = run({"inspect", "--ckpt", (dir / "junk.ckpt").string()});
  CHECK(corrupt.code == 2);
  CHECK(corrupt.err.find("not an LSAT checkpoint") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("eval on a fresh checkpoint reproduces the training-time accuracy") {
  fs::path dir = lsat::testing::scratch_dir("cli_train");
  fs::path data = dir / "data", out = dir / "run";
  lsat::testing::write_synthetic_cifar(data, 8, 21);

  RunConfig config;
  config.model = lsat::testing::small_cifar_config();
  config.train.epochs = 2;
  config.train.warmup_epochs = 1;
  config.train.batch_size = 8;
  config.train.micro_batch = 8;
  std::ofstream(dir / "run.json") << run_config_to_json(config);

  Outcome r = run({"train", "--config", (dir / "run.json").string(), "--data", data.string(), "--out", out.string(),
                   "--subset", "24", "--seed", "3"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  auto csv = lines(out / "metrics.csv");
  REQUIRE(csv.size() == 3);
  CHECK(csv[0] == "epoch,lr,train_loss,test_acc,wall_seconds");
  CHECK(field(csv[2], 0) == "2");

  RunConfig written = load_run_config(out / "config.json");
  CHECK(written.model == config.model);
  CHECK(written.train.subset == 24);
  CHECK(written.train.seed == 3);

  Outcome e = run({"eval", "--ckpt", (out / "last.ckpt").string(), "--data", data.string()});
  REQUIRE_MESSAGE(e.code == 0, e.err);
  CHECK(e.out == "test_acc " + field(csv[2], 3) + " (8 images)\n");

  Outcome i = run({"inspect", "--ckpt", (out / "last.ckpt").string()});
  CHECK(i.code == 0);
  CHECK(i.out.find("epoch 2, schedule step 6") != std::string::npos);
  CHECK(i.out.find("optimizer state present") != std::string::npos);

  // Resuming a finished run and extending it continues the schedule.
  Outcome more = run({"train", "--config", (dir / "run.json").string(), "--data", data.string(), "--out",
                      out.string(), "--subset", "24", "--seed", "3", "--epochs", "3", "--resume",
                      (out / "last.ckpt").string()});
  REQUIRE_MESSAGE(more.code == 0, more.err);
  CHECK(lines(out / "metrics.csv").size() == 4);
  CHECK(load_checkpoint<float>(out / "last.ckpt").meta.schedule_step == 9);
  fs::remove_all(dir);
}
