#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowpat/dataset.hpp"
#include "flowpat/models/senet.hpp"
#include "flowpat/models/svm.hpp"
#include "flowpat/models/tree.hpp"
#include "flowpat/optim.hpp"
#include "flowpat/synth.hpp"

namespace flowpat::pipeline {

// Every tunable of the toolkit, loadable from a JSON file with dotted-path
// command-line overrides. Unknown keys are rejected so typos cannot silently
// fall back to defaults. The canonical JSON form (sorted keys) is hashed into
// every output artifact.
struct RunConfig {
  std::uint64_t seed = 7;
  std::size_t threads = 0;  // 0 = library default

  struct Synth {
    std::size_t experiments_per_row = 20;
    synth::SynthConfig signal;  // seed is overridden by RunConfig::seed
  } synth;

  struct Split {
    SplitProtocol protocol = SplitProtocol::ExperimentBased;
    std::size_t train_per_pattern = 2000;
    std::size_t eval_per_pattern = 500;
    std::size_t window_len = kWindowLength;
  } split;

  struct Model {
    std::string type = "senet1d";  // senet1d | cnn1d | mlp | decision_tree |
                                   // random_forest | svm
    std::size_t pca_components = 0;  // 0 = no PCA front end
    models::SENetConfig senet;
    models::ForestConfig forest;
    models::TreeConfig tree;
    models::SvmConfig svm;
  } model;

  struct Train {
    std::size_t epochs = 300;
    std::size_t batch_size = 64;
    nn::AdamWConfig optimizer;
  } train;

  struct Predict {
    std::size_t stride = 500;  // non-overlapping 5 s cadence by default
  } predict;

  struct Psd {
    std::size_t n_points = 8192;
    std::size_t segment_len = 512;
    std::size_t overlap = 256;
    double cumulative_fraction = 0.99;
    double sampling_margin_k = 2.5;
  } psd;

  void validate() const;  // throws ConfigError
};

// Canonical JSON tree for the default-constructed config; doubles as the
// schema for unknown-key rejection.
nlohmann::json to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j);

// defaults <- file (optional) <- overrides, validating every key and value.
// Overrides are dotted paths into the JSON tree, e.g. {"train.epochs","30"}.
RunConfig load_config(const std::filesystem::path* config_file,
                      const std::vector<std::pair<std::string, std::string>>&
                          overrides);

// FNV-1a 64 as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string config_hash(const RunConfig& cfg);
std::string file_hash(const std::filesystem::path& path);

}  // namespace flowpat::pipeline
