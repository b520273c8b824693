#include "flowpat/detail/vec_math.hpp"

#include <cmath>

// Built with fast-math (see CMakeLists) so the exp calls lower to the
// glibc vector variants. Only these two kernels live here; everything that
// must honor NaN/Inf semantics stays in the default-flags units.

namespace flowpat::nn::detail {

void sigmoid_forward(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void swish_forward(const double* x, double* sig, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double s = 1.0 / (1.0 + std::exp(-x[i]));
    sig[i] = s;
    out[i] = x[i] * s;
  }
}

}  // namespace flowpat::nn::detail
