// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsat/config_io.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "lsat/error.hpp"

namespace lsat {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const char* section) {
  if (!j.is_object()) throw ConfigError(std::string(section) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + section);
  }
}

template <typename V>
void read(const json& j, const char* key, V& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

json shifts_to_json(const ShiftSpec& spec) {
  json out = json::array();
  for (const Shift& s : spec) out.push_back({s.dx, s.dy});
  return out;
}

ShiftSpec shifts_from_json(const json& j) {
  if (j.is_string()) return default_shift_set(j.get<std::string>());
  if (!j.is_array()) throw ConfigError("shifts must be a list of [dx, dy] pairs or a set name");
  std::vector<Shift> shifts;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number_integer()) {
      throw ConfigError("each shift must be an [dx, dy] integer pair, got " + pair.dump());
    }
    shifts.push_back({pair[0].get<int>(), pair[1].get<int>()});
  }
  return ShiftSpec(std::move(shifts));
}

json model_to(const ModelConfig& c) {
  json stages = json::array();
  for (const auto& s : c.stages) {
    stages.push_back({{"width", s.width}, {"heads", s.heads}, {"repeats", s.repeats}, {"downsample", s.downsample}});
  }
  return {{"name", c.name},
          {"channels", c.channels},
          {"height", c.height},
          {"width", c.width},
          {"patch_size", c.embed.patch_size},
          {"embed_kernel", c.embed.kernel},
          {"embed_padding", c.embed.padding},
          {"conv_variations", c.embed.conv_variations},
          {"embed_width", c.embed_width},
          {"local_heads", c.local_heads},
          {"shifts", shifts_to_json(c.shifts)},
          {"positional", std::string(to_string(c.positional))},
          {"stages", stages},
          {"classes", c.classes},
          {"drop_path", c.drop_path},
          {"dropout", c.dropout}};
}

ModelConfig model_from(const json& j) {
  check_keys(j,
             {"preset", "name", "channels", "height", "width", "patch_size", "embed_kernel", "embed_padding",
              "conv_variations", "embed_width", "local_heads", "shifts", "positional", "stages", "classes",
              "drop_path", "dropout"},
             "model");
  ModelConfig c;
  if (j.contains("preset")) c = preset(j.at("preset").get<std::string>());
  read(j, "name", c.name);
  read(j, "channels", c.channels);
  read(j, "height", c.height);
  read(j, "width", c.width);
  read(j, "patch_size", c.embed.patch_size);
  read(j, "embed_kernel", c.embed.kernel);
  read(j, "embed_padding", c.embed.padding);
  read(j, "conv_variations", c.embed.conv_variations);
  read(j, "embed_width", c.embed_width);
  read(j, "local_heads", c.local_heads);
  if (j.contains("shifts")) c.shifts = shifts_from_json(j.at("shifts"));
  if (j.contains("positional")) c.positional = positional_mode_from_string(j.at("positional").get<std::string>());
  if (j.contains("stages")) {
    c.stages.clear();
    for (const auto& s : j.at("stages")) {
      check_keys(s, {"width", "heads", "repeats", "downsample"}, "stage");
      StageSpec stage;
      read(s, "width", stage.width);
      read(s, "heads", stage.heads);
      read(s, "repeats", stage.repeats);
      read(s, "downsample", stage.downsample);
      c.stages.push_back(stage);
    }
  }
  read(j, "classes", c.classes);
  read(j, "drop_path", c.drop_path);
  read(j, "dropout", c.dropout);
  return c;
}

json train_to(const TrainConfig& c) {
  return {{"base_lr", c.base_lr},     {"batch_size", c.batch_size},
          {"micro_batch", c.micro_batch}, {"epochs", c.epochs},
          {"warmup_epochs", c.warmup_epochs}, {"weight_decay", c.weight_decay},
          {"clip_norm", c.clip_norm}, {"beta1", c.beta1},
          {"beta2", c.beta2},         {"adam_eps", c.adam_eps},
          {"seed", c.seed},           {"subset", c.subset},
          {"augment", c.augment}};
}

TrainConfig train_from(const json& j) {
  check_keys(j,
             {"base_lr", "batch_size", "micro_batch", "epochs", "warmup_epochs", "weight_decay", "clip_norm", "beta1",
              "beta2", "adam_eps", "seed", "subset", "augment"},
             "train");
  TrainConfig c;
  read(j, "base_lr", c.base_lr);
  read(j, "batch_size", c.batch_size);
  read(j, "micro_batch", c.micro_batch);
  read(j, "epochs", c.epochs);
  read(j, "warmup_epochs", c.warmup_epochs);
  read(j, "weight_decay", c.weight_decay);
  read(j, "clip_norm", c.clip_norm);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "adam_eps", c.adam_eps);
  read(j, "seed", c.seed);
  read(j, "subset", c.subset);
  read(j, "augment", c.augment);
  return c;
}

json parse(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

std::string model_config_to_json(const ModelConfig& config) { return model_to(config).dump(2); }
ModelConfig model_config_from_json(std::string_view text) { return model_from(parse(text)); }
std::string train_config_to_json(const TrainConfig& config) { return train_to(config).dump(2); }
TrainConfig train_config_from_json(std::string_view text) { return train_from(parse(text)); }

std::string run_config_to_json(const RunConfig& config) {
  json j = {{"model", model_to(config.model)}, {"train", train_to(config.train)}, {"dataset", config.dataset}};
  return j.dump(2);
}

RunConfig run_config_from_json(std::string_view text) {
  json j = parse(text);
  check_keys(j, {"model", "train", "dataset"}, "run config");
  RunConfig run;
  if (j.contains("model")) run.model = model_from(j.at("model"));
  else run.model = preset("cifar-tiny");
  if (j.contains("train")) run.train = train_from(j.at("train"));
  read(j, "dataset", run.dataset);
  return run;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return run_config_from_json(buffer.str());
}

}  // namespace lsat
