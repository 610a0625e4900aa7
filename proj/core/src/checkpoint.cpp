// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsat/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <string>

#include "lsat/config_io.hpp"
#include "lsat/error.hpp"

namespace lsat {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint payloads are written in host order");

using nlohmann::json;
constexpr char kMagic[8] = {'L', 'S', 'A', 'T', 'C', 'K', 'P', 'T'};

template <typename T>
constexpr const char* dtype_name() {
  return sizeof(T) == 4 ? "float32" : "float64";
}

template <typename U>
void put(std::string& out, U value) {
  char bytes[sizeof(U)];
  std::memcpy(bytes, &value, sizeof(U));
  out.append(bytes, sizeof(U));
}

template <typename U>
U get(const std::string& in, std::size_t offset) {
  U value;
  std::memcpy(&value, in.data() + offset, sizeof(U));
  return value;
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const Model<T>& model, const AdamWState<T>* optimizer,
                     const CheckpointMeta& meta) {
  json tensors = json::array();
  std::vector<std::span<const T>> payload;
  std::size_t offset = 0;
  auto add = [&](const std::string& name, const Shape& shape, std::span<const T> values) {
    tensors.push_back({{"name", name}, {"shape", shape}, {"offset", offset}, {"count", values.size()}});
    payload.push_back(values);
    offset += values.size();
  };
  const auto& entries = model.parameters().entries();
  for (const auto& p : entries) add(p.name, p.value.shape(), p.value.data());
  if (optimizer) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      add("adam.m/" + entries[i].name, entries[i].value.shape(), optimizer->first[i]);
      add("adam.v/" + entries[i].name, entries[i].value.shape(), optimizer->second[i]);
    }
  }
  json manifest = {{"format_version", kCheckpointVersion},
                   {"dtype", dtype_name<T>()},
                   {"model_config", json::parse(model_config_to_json(model.config()))},
                   {"epoch", meta.epoch},
                   {"schedule_step", meta.schedule_step},
                   {"optimizer", optimizer ? json({{"step", optimizer->step}}) : json(nullptr)},
                   {"tensors", tensors}};
  if (meta.stats) manifest["normalization"] = {{"mean", meta.stats->mean}, {"stddev", meta.stats->stddev}};
  if (meta.train) manifest["train_config"] = json::parse(train_config_to_json(*meta.train));

  std::string text = manifest.dump();
  std::string header(kMagic, sizeof(kMagic));
  put<std::uint32_t>(header, kCheckpointVersion);
  put<std::uint64_t>(header, text.size());

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (auto values : payload) {
      out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    }
    if (!out) throw FormatError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";
  constexpr std::size_t header = sizeof(kMagic) + 4 + 8;
  if (bytes.size() < header || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(where + "not an LSAT checkpoint");
  }
  auto version = get<std::uint32_t>(bytes, 8);
  if (version != kCheckpointVersion) {
    throw FormatError(where + "unsupported format version " + std::to_string(version));
  }
  auto length = get<std::uint64_t>(bytes, 12);
  if (length > bytes.size() - header) throw FormatError(where + "truncated manifest");
  json manifest;
  try {
    manifest = json::parse(bytes.substr(header, length));
  } catch (const json::exception& e) {
    throw FormatError(where + "corrupt manifest: " + e.what());
  }
  std::size_t payload_begin = header + length;
  std::size_t payload_count = (bytes.size() - payload_begin) / sizeof(T);
  if ((bytes.size() - payload_begin) % sizeof(T) != 0) throw FormatError(where + "truncated payload");

  try {
    if (manifest.at("dtype").get<std::string>() != dtype_name<T>()) {
      throw FormatError(where + "dtype " + manifest.at("dtype").get<std::string>() + ", expected " + dtype_name<T>());
    }
    ModelConfig config = model_config_from_json(manifest.at("model_config").dump());
    Model<T> model(config, 0);

    std::unordered_map<std::string, json> index;
    for (const auto& t : manifest.at("tensors")) index[t.at("name").get<std::string>()] = t;
    auto read_tensor = [&](const std::string& name, const Shape& shape, std::span<T> out) {
      auto it = index.find(name);
      if (it == index.end()) throw FormatError(where + "missing tensor " + name);
      const json& t = it->second;
      if (t.at("shape").get<Shape>() != shape) {
        throw FormatError(where + "tensor " + name + " has shape " + shape_string(t.at("shape").get<Shape>()) +
                          ", model expects " + shape_string(shape));
      }
      auto off = t.at("offset").get<std::size_t>();
      auto count = t.at("count").get<std::size_t>();
      if (count != out.size() || off > payload_count || count > payload_count - off) {
        throw FormatError(where + "tensor " + name + " exceeds the payload");
      }
      std::memcpy(out.data(), bytes.data() + payload_begin + off * sizeof(T), count * sizeof(T));
    };

    auto& entries = model.parameters().entries();
    if (index.size() != entries.size() && index.size() != 3 * entries.size()) {
      throw FormatError(where + "manifest lists " + std::to_string(index.size()) + " tensors for a model with " +
                        std::to_string(entries.size()) + " parameters");
    }
    for (auto& p : entries) read_tensor(p.name, p.value.shape(), p.value.mutable_data());

    Checkpoint<T> ckpt{std::move(model), std::nullopt, {}};
    if (!manifest.at("optimizer").is_null()) {
      AdamWState<T> state;
      state.step = manifest.at("optimizer").at("step").get<std::size_t>();
      for (const auto& p : ckpt.model.parameters().entries()) {
        state.first.emplace_back(p.value.numel());
        state.second.emplace_back(p.value.numel());
        read_tensor("adam.m/" + p.name, p.value.shape(), state.first.back());
        read_tensor("adam.v/" + p.name, p.value.shape(), state.second.back());
      }
      ckpt.optimizer = std::move(state);
    }
    ckpt.meta.epoch = manifest.at("epoch").get<std::size_t>();
    ckpt.meta.schedule_step = manifest.at("schedule_step").get<std::size_t>();
    if (manifest.contains("normalization")) {
      ChannelStats stats;
      stats.mean = manifest["normalization"].at("mean").get<std::array<double, 3>>();
      stats.stddev = manifest["normalization"].at("stddev").get<std::array<double, 3>>();
      ckpt.meta.stats = stats;
    }
    if (manifest.contains("train_config")) ckpt.meta.train = train_config_from_json(manifest["train_config"].dump());
    return ckpt;
  } catch (const json::exception& e) {
    throw FormatError(where + "corrupt manifest: " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(where + "invalid model config: " + e.what());
  }
}

template void save_checkpoint(const std::filesystem::path&, const Model<float>&, const AdamWState<float>*,
                              const CheckpointMeta&);
template void save_checkpoint(const std::filesystem::path&, const Model<double>&, const AdamWState<double>*,
                              const CheckpointMeta&);
template Checkpoint<float> load_checkpoint(const std::filesystem::path&);
template Checkpoint<double> load_checkpoint(const std::filesystem::path&);

}  // namespace lsat
