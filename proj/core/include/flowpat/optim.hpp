#pragma once

#include <cstdint>
#include <vector>

#include "flowpat/tensor.hpp"

namespace flowpat::nn {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

// AdamW with decoupled weight decay: the decay multiplies the parameter
// directly (p *= 1 - lr*wd) instead of being folded into the gradient.
// Moments are bias-corrected. Fully deterministic.
class AdamW {
 public:
  explicit AdamW(std::vector<Tensor> params, AdamWConfig cfg = {});

  void step();
  void zero_grad();
  std::int64_t steps() const { return t_; }
  const AdamWConfig& config() const { return cfg_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  AdamWConfig cfg_;
  std::int64_t t_ = 0;
};

}  // namespace flowpat::nn
