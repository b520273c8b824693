#pragma once

#include <cstddef>

namespace flowpat::nn::detail {

// C[m x n] += op(A) * op(B), row-major, double precision.
// op is identity or transpose per the flags; lda/ldb are the leading
// dimensions of the *stored* matrices. Blocked and register-tiled; safe to
// call concurrently (scratch is per-call).
void gemm_accum(std::size_t m, std::size_t n, std::size_t k, const double* a,
                std::size_t lda, bool trans_a, const double* b,
                std::size_t ldb, bool trans_b, double* c, std::size_t ldc);

// Convenience: plain row-major C += A*B with tight leading dimensions.
inline void gemm_accum(std::size_t m, std::size_t n, std::size_t k,
                       const double* a, const double* b, double* c) {
  gemm_accum(m, n, k, a, k, false, b, n, false, c, n);
}

}  // namespace flowpat::nn::detail
