#pragma once

#include <cstdint>
#include <vector>

#include "flowpat/rng.hpp"
#include "flowpat/tensor.hpp"

namespace flowpat::nn {

// Differentiable primitives. All shapes are batch-first. Every op checks its
// shape contract and throws ConfigError naming the offending dimensions.

Tensor add(const Tensor& a, const Tensor& b);           // same shape
Tensor scale(const Tensor& a, double s);

// Cross-correlation (no kernel flip). x:[B,Cin,L], w:[Cout,Cin,K], b:[Cout].
// L' = (L + pad_left + pad_right - K)/stride + 1.
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b,
              std::size_t stride, std::size_t pad_left, std::size_t pad_right);

// x:[B,In] * w:[Out,In]^T + b:[Out] -> [B,Out]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor swish(const Tensor& x);  // x * sigmoid(x)

// Row-wise softmax over [B,C].
Tensor softmax(const Tensor& x);

// Non-overlapping max pooling, stride == k, floor semantics: [B,C,L] -> [B,C,L/k].
Tensor max_pool1d(const Tensor& x, std::size_t k = 2);

// [B,C,L] -> [B,C]
Tensor global_avg_pool1d(const Tensor& x);

// [B,...] -> [B,rest]
Tensor flatten(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);

// x:[B,C,L] scaled per channel by gate:[B,C].
Tensor channel_scale(const Tensor& x, const Tensor& gate);

// Inverted dropout: training keeps with prob 1-rate and scales kept values
// by 1/(1-rate); eval returns x unchanged. rate must lie in [0,1).
Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng);

// Per-channel normalization over (batch, length) of [B,C,L]. Training mode
// normalizes with batch statistics (biased variance) and updates the running
// estimates (unbiased variance) with `momentum`; eval mode uses the running
// estimates.
Tensor batch_norm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                    std::vector<double>& running_mean,
                    std::vector<double>& running_var, double momentum,
                    double eps, bool training);

// Mean softmax cross-entropy over the batch, computed via log-sum-exp.
// logits:[B,C], targets in [0,C). d(loss)/d(logits) = (softmax - onehot)/B.
// Throws NumericError on non-finite logits.
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets);

}  // namespace flowpat::nn
