#pragma once

#include <cstdint>
#include <vector>

#include "flowpat/dataset.hpp"
#include "flowpat/modules.hpp"
#include "flowpat/optim.hpp"

namespace flowpat::models {

struct TrainConfig {
  std::size_t epochs = 300;
  std::size_t batch_size = 64;
  nn::AdamWConfig optimizer;
  std::uint64_t seed = 0;
  bool track_best = true;  // keep a copy of the best-eval-accuracy weights
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double eval_loss = 0.0;
  double eval_accuracy = 0.0;
};

struct TrainingLog {
  std::vector<EpochStats> epochs;
};

struct TrainResult {
  TrainingLog log;
  std::size_t best_epoch = 0;
  double best_eval_accuracy = 0.0;
  // Flattened parameter snapshot at best_epoch when track_best is set.
  std::vector<double> best_parameters;
};

// Builds [B,1,window] input tensors from window samples.
nn::Tensor batch_input(std::span<const WindowSample> samples,
                       std::span<const std::uint32_t> indices);

// Mini-batch AdamW training with per-epoch eval loss/accuracy. Shuffling,
// init, and dropout all derive from seeds, so the log is reproducible.
// Throws NumericError naming the epoch when the loss goes non-finite.
TrainResult train_deep_model(nn::Module& model, const DatasetSplit& split,
                             const TrainConfig& cfg);

// Argmax predictions for a deep model in eval mode (no gradient recording).
std::vector<int> predict_deep(nn::Module& model,
                              std::span<const WindowSample> samples,
                              std::size_t batch_size = 256);

// Softmax confidences alongside predictions (for streaming inference).
struct Prediction {
  int label;
  double confidence;
};
std::vector<Prediction> predict_deep_with_confidence(
    nn::Module& model, std::span<const WindowSample> samples,
    std::size_t batch_size = 256);

// Copies flattened parameters into / out of a module.
std::vector<double> flatten_parameters(nn::Module& model);
void load_flat_parameters(nn::Module& model, std::span<const double> flat);

}  // namespace flowpat::models
