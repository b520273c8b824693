#include "flowpat/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowpat/errors.hpp"
#include "flowpat/ops.hpp"
#include "flowpat/rng.hpp"

namespace flowpat::models {

using nn::Tensor;

Tensor batch_input(std::span<const WindowSample> samples,
                   std::span<const std::uint32_t> indices) {
  const std::size_t bs = indices.size();
  const std::size_t d = samples[indices[0]].values.size();
  std::vector<double> data(bs * d);
  for (std::size_t i = 0; i < bs; ++i)
    std::copy(samples[indices[i]].values.begin(),
              samples[indices[i]].values.end(), data.begin() + i * d);
  return Tensor::from({bs, 1, d}, std::move(data));
}

namespace {

std::vector<int> batch_targets(std::span<const WindowSample> samples,
                               std::span<const std::uint32_t> indices) {
  std::vector<int> t(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i)
    t[i] = pattern_code(samples[indices[i]].label);
  return t;
}

struct EvalStats {
  double loss;
  double accuracy;
};

EvalStats evaluate_pass(nn::Module& model,
                        std::span<const WindowSample> samples,
                        std::size_t batch_size) {
  nn::NoGrad no_grad;
  const bool was_training = model.training();
  model.set_training(false);
  double loss_sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t off = 0; off < samples.size(); off += batch_size) {
    const std::size_t bs = std::min(batch_size, samples.size() - off);
    std::vector<std::uint32_t> idx(bs);
    std::iota(idx.begin(), idx.end(), static_cast<std::uint32_t>(off));
    Tensor logits = model.forward(batch_input(samples, idx));
    const auto targets = batch_targets(samples, idx);
    loss_sum += nn::cross_entropy(logits, targets).item() *
                static_cast<double>(bs);
    const std::size_t c = logits.dim(1);
    for (std::size_t i = 0; i < bs; ++i) {
      const double* row = logits.values().data() + i * c;
      const auto pred = static_cast<int>(
          std::max_element(row, row + c) - row);
      if (pred == targets[i]) ++hits;
    }
  }
  model.set_training(was_training);
  return {loss_sum / static_cast<double>(samples.size()),
          static_cast<double>(hits) / static_cast<double>(samples.size())};
}

}  // namespace

TrainResult train_deep_model(nn::Module& model, const DatasetSplit& split,
                             const TrainConfig& cfg) {
  if (split.train.empty() || split.eval.empty())
    throw ConfigError("train: split has an empty partition");
  if (cfg.batch_size == 0) throw ConfigError("train: batch_size must be >= 1");

  nn::AdamW opt(model.parameters(), cfg.optimizer);
  TrainResult result;
  result.best_eval_accuracy = -1.0;

  std::vector<std::uint32_t> order(split.train.size());
  std::iota(order.begin(), order.end(), 0u);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, {0x0E9, epoch}));
    shuffle_rng.shuffle(order);
    model.set_training(true);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t off = 0; off < order.size(); off += cfg.batch_size) {
      const std::size_t bs = std::min(cfg.batch_size, order.size() - off);
      std::span<const std::uint32_t> idx(order.data() + off, bs);
      Tensor logits = model.forward(batch_input(split.train, idx));
      Tensor loss = nn::cross_entropy(logits, batch_targets(split.train, idx));
      const double lv = loss.item();
      if (!std::isfinite(lv))
        throw NumericError("training diverged (non-finite loss) at epoch " +
                           std::to_string(epoch));
      opt.zero_grad();
      loss.backward();
      opt.step();
      loss_sum += lv * static_cast<double>(bs);
      seen += bs;
    }

    const EvalStats ev = evaluate_pass(model, split.eval, 256);
    result.log.epochs.push_back({epoch, loss_sum / static_cast<double>(seen),
                                 ev.loss, ev.accuracy});
    if (cfg.track_best && ev.accuracy > result.best_eval_accuracy) {
      result.best_eval_accuracy = ev.accuracy;
      result.best_epoch = epoch;
      result.best_parameters = flatten_parameters(model);
    }
  }
  return result;
}

std::vector<int> predict_deep(nn::Module& model,
                              std::span<const WindowSample> samples,
                              std::size_t batch_size) {
  auto preds = predict_deep_with_confidence(model, samples, batch_size);
  std::vector<int> out(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) out[i] = preds[i].label;
  return out;
}

std::vector<Prediction> predict_deep_with_confidence(
    nn::Module& model, std::span<const WindowSample> samples,
    std::size_t batch_size) {
  nn::NoGrad no_grad;
  const bool was_training = model.training();
  model.set_training(false);
  std::vector<Prediction> out;
  out.reserve(samples.size());
  for (std::size_t off = 0; off < samples.size(); off += batch_size) {
    const std::size_t bs = std::min(batch_size, samples.size() - off);
    std::vector<std::uint32_t> idx(bs);
    std::iota(idx.begin(), idx.end(), static_cast<std::uint32_t>(off));
    Tensor probs = nn::softmax(model.forward(batch_input(samples, idx)));
    const std::size_t c = probs.dim(1);
    for (std::size_t i = 0; i < bs; ++i) {
      const double* row = probs.values().data() + i * c;
      const double* best = std::max_element(row, row + c);
      out.push_back({static_cast<int>(best - row), *best});
    }
  }
  model.set_training(was_training);
  return out;
}

std::vector<double> flatten_parameters(nn::Module& model) {
  std::vector<double> flat;
  for (const auto& p : model.parameters())
    flat.insert(flat.end(), p.values().begin(), p.values().end());
  return flat;
}

void load_flat_parameters(nn::Module& model, std::span<const double> flat) {
  std::size_t off = 0;
  for (auto& p : model.parameters()) {
    if (off + p.size() > flat.size())
      throw ConfigError("load_flat_parameters: size mismatch");
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
              flat.begin() + static_cast<std::ptrdiff_t>(off + p.size()),
              p.values().begin());
    off += p.size();
  }
  if (off != flat.size())
    throw ConfigError("load_flat_parameters: size mismatch");
}

}  // namespace flowpat::models
