#include "flowpat/detail/gemm.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

namespace flowpat::nn::detail {

namespace {

// GCC/Clang vector extension; the compiler lowers to the widest SIMD the
// target offers and splits otherwise. Memory access goes through memcpy in
// loadu/storeu, so the type's natural 64-byte alignment never constrains
// the panels.
using vd = double __attribute__((vector_size(64)));

constexpr std::size_t kVL = 8;   // doubles per vector
constexpr std::size_t kMR = 8;   // rows per register tile
constexpr std::size_t kNR = 16;  // cols per register tile (2 vectors)
constexpr std::size_t kKC = 320; // k block
constexpr std::size_t kMC = 128; // m block

inline vd splat(double x) { return (vd){x, x, x, x, x, x, x, x}; }
inline vd loadu(const double* p) {
  vd v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}
inline void storeu(double* p, vd v) { std::memcpy(p, &v, sizeof(v)); }

inline double elem(const double* m, std::size_t ld, bool trans, std::size_t i,
                   std::size_t j) {
  return trans ? m[j * ld + i] : m[i * ld + j];
}

// Panels: A packed as kMR-row column-major strips, B as kNR-col row strips.
void pack_a(std::size_t mc, std::size_t kc, const double* a, std::size_t lda,
            bool trans, std::size_t i0, std::size_t p0, double* out) {
  for (std::size_t is = 0; is < mc; is += kMR) {
    const std::size_t mr = std::min(kMR, mc - is);
    for (std::size_t p = 0; p < kc; ++p) {
      for (std::size_t i = 0; i < mr; ++i)
        *out++ = elem(a, lda, trans, i0 + is + i, p0 + p);
      for (std::size_t i = mr; i < kMR; ++i) *out++ = 0.0;
    }
  }
}

void pack_b(std::size_t kc, std::size_t nc, const double* b, std::size_t ldb,
            bool trans, std::size_t p0, std::size_t j0, double* out) {
  for (std::size_t js = 0; js < nc; js += kNR) {
    const std::size_t nr = std::min(kNR, nc - js);
    if (nr == kNR && !trans) {
      for (std::size_t p = 0; p < kc; ++p) {
        std::memcpy(out, b + (p0 + p) * ldb + j0 + js, kNR * sizeof(double));
        out += kNR;
      }
    } else {
      for (std::size_t p = 0; p < kc; ++p) {
        for (std::size_t j = 0; j < nr; ++j)
          *out++ = elem(b, ldb, trans, p0 + p, j0 + js + j);
        for (std::size_t j = nr; j < kNR; ++j) *out++ = 0.0;
      }
    }
  }
}

void kernel_full(std::size_t kc, const double* __restrict a,
                 const double* __restrict b, double* __restrict c,
                 std::size_t ldc) {
  vd c00{}, c01{}, c10{}, c11{}, c20{}, c21{}, c30{}, c31{};
  vd c40{}, c41{}, c50{}, c51{}, c60{}, c61{}, c70{}, c71{};
  for (std::size_t p = 0; p < kc; ++p) {
    const vd b0 = loadu(b), b1 = loadu(b + kVL);
    vd av;
    av = splat(a[0]); c00 += av * b0; c01 += av * b1;
    av = splat(a[1]); c10 += av * b0; c11 += av * b1;
    av = splat(a[2]); c20 += av * b0; c21 += av * b1;
    av = splat(a[3]); c30 += av * b0; c31 += av * b1;
    av = splat(a[4]); c40 += av * b0; c41 += av * b1;
    av = splat(a[5]); c50 += av * b0; c51 += av * b1;
    av = splat(a[6]); c60 += av * b0; c61 += av * b1;
    av = splat(a[7]); c70 += av * b0; c71 += av * b1;
    a += kMR;
    b += kNR;
  }
  double* r;
  r = c + 0 * ldc; storeu(r, loadu(r) + c00); storeu(r + kVL, loadu(r + kVL) + c01);
  r = c + 1 * ldc; storeu(r, loadu(r) + c10); storeu(r + kVL, loadu(r + kVL) + c11);
  r = c + 2 * ldc; storeu(r, loadu(r) + c20); storeu(r + kVL, loadu(r + kVL) + c21);
  r = c + 3 * ldc; storeu(r, loadu(r) + c30); storeu(r + kVL, loadu(r + kVL) + c31);
  r = c + 4 * ldc; storeu(r, loadu(r) + c40); storeu(r + kVL, loadu(r + kVL) + c41);
  r = c + 5 * ldc; storeu(r, loadu(r) + c50); storeu(r + kVL, loadu(r + kVL) + c51);
  r = c + 6 * ldc; storeu(r, loadu(r) + c60); storeu(r + kVL, loadu(r + kVL) + c61);
  r = c + 7 * ldc; storeu(r, loadu(r) + c70); storeu(r + kVL, loadu(r + kVL) + c71);
}

void kernel_edge(std::size_t kc, const double* __restrict a,
                 const double* __restrict b, double* __restrict c,
                 std::size_t ldc, std::size_t mr, std::size_t nr) {
  double acc[kMR][kNR] = {};
  for (std::size_t p = 0; p < kc; ++p) {
    for (std::size_t i = 0; i < mr; ++i) {
      const double av = a[i];
      for (std::size_t j = 0; j < nr; ++j) acc[i][j] += av * b[j];
    }
    a += kMR;
    b += kNR;
  }
  for (std::size_t i = 0; i < mr; ++i)
    for (std::size_t j = 0; j < nr; ++j) c[i * ldc + j] += acc[i][j];
}

}  // namespace

void gemm_accum(std::size_t m, std::size_t n, std::size_t k, const double* a,
                std::size_t lda, bool trans_a, const double* b,
                std::size_t ldb, bool trans_b, double* c, std::size_t ldc) {
  if (m == 0 || n == 0 || k == 0) return;
  // Persistent pack buffers; reallocating multi-MB scratch per call costs
  // more in page faults than the multiply itself on small conv shapes.
  static thread_local std::vector<double> pa, pb;
  const std::size_t b_panels = (n + kNR - 1) / kNR;
  const std::size_t pb_need = b_panels * kNR * std::min(k, kKC);
  const std::size_t pa_need =
      ((std::min(m, kMC) + kMR - 1) / kMR) * kMR * std::min(k, kKC);
  if (pb.size() < pb_need) pb.resize(pb_need);
  if (pa.size() < pa_need) pa.resize(pa_need);
  double* const pb_data = pb.data();
  double* const pa_data = pa.data();

  for (std::size_t p0 = 0; p0 < k; p0 += kKC) {
    const std::size_t kc = std::min(kKC, k - p0);
    pack_b(kc, n, b, ldb, trans_b, p0, 0, pb_data);
    for (std::size_t i0 = 0; i0 < m; i0 += kMC) {
      const std::size_t mc = std::min(kMC, m - i0);
      pack_a(mc, kc, a, lda, trans_a, i0, p0, pa_data);
      const std::size_t full_np = n / kNR;
      const std::size_t full_mp = mc / kMR;
      const std::size_t n_panels = (n + kNR - 1) / kNR;
      // Column panels write disjoint slices of C, so the result is identical
      // for any thread count.
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
      for (std::size_t jp = 0; jp < n_panels; ++jp) {
        const double* bp = pb_data + jp * kNR * kc;
        const std::size_t nr = std::min(kNR, n - jp * kNR);
        for (std::size_t ip = 0; ip * kMR < mc; ++ip) {
          const double* ap = pa_data + ip * kMR * kc;
          double* cp = c + (i0 + ip * kMR) * ldc + jp * kNR;
          if (ip < full_mp && jp < full_np)
            kernel_full(kc, ap, bp, cp, ldc);
          else
            kernel_edge(kc, ap, bp, cp, ldc, std::min(kMR, mc - ip * kMR), nr);
        }
      }
    }
  }
}

}  // namespace flowpat::nn::detail
