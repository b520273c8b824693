#pragma once

#include <cstddef>

namespace flowpat::nn::detail {

// Element-wise transcendental kernels, compiled in their own translation
// unit with vector-math codegen enabled. Inputs are finite activations.
void sigmoid_forward(const double* x, double* out, std::size_t n);
// out = x * sigmoid(x), sig = sigmoid(x)
void swish_forward(const double* x, double* sig, double* out, std::size_t n);

}  // namespace flowpat::nn::detail
