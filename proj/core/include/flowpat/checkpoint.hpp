#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>

#include "flowpat/modules.hpp"

namespace flowpat::models {

// Deep-model checkpoint: one line of JSON (version, model type, architecture
// config, the ordered entry list, metadata), then raw little-endian 64-bit
// float blocks in declaration order.
inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(nn::Module& model, const std::string& model_type,
                     const nlohmann::json& arch_config,
                     const nlohmann::json& meta,
                     const std::filesystem::path& path);

struct SENetConfig;
nlohmann::json senet_config_to_json(const SENetConfig& c);

struct LoadedModel {
  std::unique_ptr<nn::Module> module;
  std::string model_type;
  nlohmann::json arch_config;
  nlohmann::json meta;
};

// Rebuilds the module from the stored architecture config and loads the
// parameter blocks. Knows the deep model types: senet1d, cnn1d, mlp.
LoadedModel load_checkpoint(const std::filesystem::path& path);

// True when the file starts with the checkpoint header (vs a classical
// model's JSON document).
bool is_deep_checkpoint(const std::filesystem::path& path);

}  // namespace flowpat::models
