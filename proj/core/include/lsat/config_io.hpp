// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "lsat/model.hpp"
#include "lsat/training.hpp"

namespace lsat {

// Run configuration file (JSON):
//
//   {
//     "model": {"preset": "cifar-tiny", "positional": "shared", ...},
//     "train": {"epochs": 20, "batch_size": 128, "subset": 5000, ...},
//     "dataset": "cifar10"
//   }
//
// A model section starts from "preset" (when given) and applies every other
// key as an override. "shifts" is a list of [dx, dy] pairs or the name of a
// built-in set. Unknown keys raise ConfigError.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::string dataset = "cifar10";
};

std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(std::string_view text);

std::string train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(std::string_view text);

std::string run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace lsat
