#include "flowpat/modules.hpp"

#include <cmath>

#include "flowpat/errors.hpp"

namespace flowpat::nn {

std::size_t Module::parameter_count() {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.size();
  return n;
}

Tensor init_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> data(shape_size(shape));
  for (double& v : data) v = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(data), /*requires_grad=*/true);
}

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels,
               std::size_t kernel, std::size_t stride, Rng& rng)
    : stride_(stride),
      pad_l_((kernel - 1) / 2),
      pad_r_(kernel - 1 - (kernel - 1) / 2) {
  if (kernel == 0) throw ConfigError("Conv1d: kernel must be >= 1");
  const std::size_t fan_in = in_channels * kernel;
  w_ = init_uniform({out_channels, in_channels, kernel}, fan_in, rng);
  b_ = init_uniform({out_channels}, fan_in, rng);
}

Tensor Conv1d::forward(const Tensor& x) {
  return conv1d(x, w_, b_, stride_, pad_l_, pad_r_);
}

void Conv1d::collect_parameters(std::vector<Tensor>& out) {
  out.push_back(w_);
  out.push_back(b_);
}

void Conv1d::collect_state(const std::string& prefix,
                           std::vector<StateEntry>& out) {
  out.push_back({prefix + "weight", true, w_.shape(), &w_.values()});
  out.push_back({prefix + "bias", true, b_.shape(), &b_.values()});
}

Linear::Linear(std::size_t in, std::size_t out, Rng& rng) {
  w_ = init_uniform({out, in}, in, rng);
  b_ = init_uniform({out}, in, rng);
}

Tensor Linear::forward(const Tensor& x) { return linear(x, w_, b_); }

void Linear::collect_parameters(std::vector<Tensor>& out) {
  out.push_back(w_);
  out.push_back(b_);
}

void Linear::collect_state(const std::string& prefix,
                           std::vector<StateEntry>& out) {
  out.push_back({prefix + "weight", true, w_.shape(), &w_.values()});
  out.push_back({prefix + "bias", true, b_.shape(), &b_.values()});
}

BatchNorm1d::BatchNorm1d(std::size_t channels, double momentum, double eps)
    : gamma_(Tensor::full({channels}, 1.0, true)),
      beta_(Tensor::zeros({channels}, true)),
      running_mean_(channels, 0.0),
      running_var_(channels, 1.0),
      momentum_(momentum),
      eps_(eps) {}

Tensor BatchNorm1d::forward(const Tensor& x) {
  return batch_norm1d(x, gamma_, beta_, running_mean_, running_var_, momentum_,
                      eps_, training());
}

void BatchNorm1d::collect_parameters(std::vector<Tensor>& out) {
  out.push_back(gamma_);
  out.push_back(beta_);
}

void BatchNorm1d::collect_state(const std::string& prefix,
                                std::vector<StateEntry>& out) {
  out.push_back({prefix + "gamma", true, gamma_.shape(), &gamma_.values()});
  out.push_back({prefix + "beta", true, beta_.shape(), &beta_.values()});
  out.push_back({prefix + "running_mean", false,
                 Shape{running_mean_.size()}, &running_mean_});
  out.push_back({prefix + "running_var", false, Shape{running_var_.size()},
                 &running_var_});
}

Dropout::Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
  if (rate < 0.0 || rate >= 1.0)
    throw ConfigError("Dropout: rate must lie in [0,1)");
}

Tensor Dropout::forward(const Tensor& x) {
  return dropout(x, rate_, training(), rng_);
}

Tensor Act::forward(const Tensor& x) {
  switch (kind_) {
    case Activation::Relu:
      return relu(x);
    case Activation::Sigmoid:
      return sigmoid(x);
    case Activation::Swish:
      return swish(x);
  }
  throw ConfigError("Act: unknown activation");
}

Tensor Sequential::forward(const Tensor& x) {
  Tensor h = x;
  for (auto& m : children_) h = m->forward(h);
  return h;
}

void Sequential::set_training(bool t) {
  Module::set_training(t);
  for (auto& m : children_) m->set_training(t);
}

void Sequential::collect_parameters(std::vector<Tensor>& out) {
  for (auto& m : children_) m->collect_parameters(out);
}

void Sequential::collect_state(const std::string& prefix,
                               std::vector<StateEntry>& out) {
  for (std::size_t i = 0; i < children_.size(); ++i)
    children_[i]->collect_state(prefix + std::to_string(i) + ".", out);
}

}  // namespace flowpat::nn
