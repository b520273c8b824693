#include "flowpat/models/baselines.hpp"

#include "flowpat/rng.hpp"

namespace flowpat::models {

std::unique_ptr<nn::Sequential> build_cnn1d(std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0xC41}));
  auto net = std::make_unique<nn::Sequential>();
  net->emplace<nn::Conv1d>(1, 16, 5, 1, rng);
  net->emplace<nn::Act>(nn::Activation::Relu);
  net->emplace<nn::MaxPool1d>(2);  // 500 -> 250
  net->emplace<nn::Conv1d>(16, 32, 5, 1, rng);
  net->emplace<nn::Act>(nn::Activation::Relu);
  net->emplace<nn::MaxPool1d>(2);  // 250 -> 125
  net->emplace<nn::Conv1d>(32, 64, 5, 1, rng);
  net->emplace<nn::Act>(nn::Activation::Relu);
  net->emplace<nn::MaxPool1d>(2);  // 125 -> 62
  net->emplace<nn::Flatten>();
  net->emplace<nn::Linear>(64 * 62, 128, rng);
  net->emplace<nn::Act>(nn::Activation::Relu);
  net->emplace<nn::Linear>(128, 7, rng);
  return net;
}

std::unique_ptr<nn::Sequential> build_mlp(std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x31D}));
  auto net = std::make_unique<nn::Sequential>();
  net->emplace<nn::Flatten>();
  net->emplace<nn::Linear>(500, 200, rng);
  net->emplace<nn::Act>(nn::Activation::Relu);
  net->emplace<nn::Linear>(200, 100, rng);
  net->emplace<nn::Act>(nn::Activation::Relu);
  net->emplace<nn::Linear>(100, 200, rng);
  net->emplace<nn::Act>(nn::Activation::Relu);
  net->emplace<nn::Linear>(200, 7, rng);
  return net;
}

}  // namespace flowpat::models
