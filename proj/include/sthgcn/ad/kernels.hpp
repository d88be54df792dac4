#pragma once

#include <cmath>
#include <cstddef>

#if defined(__AVX512F__) || (defined(__AVX2__) && defined(__FMA__))
#include <immintrin.h>
#endif

// Dense matrix kernels on row-major storage.
//
// Every output element of the forward product is accumulated with fused
// multiply-adds in increasing k, starting from zero, whatever row block it
// falls into. The result of a row therefore does not depend on where that
// row sits in the matrix, which keeps node relabelings exact. A fused
// multiply-add is correctly rounded, so the vector and scalar paths give
// identical bits.

namespace sthgcn::ad::kernels {

namespace simd {

#if defined(__AVX512F__)
using vec = __m512d;
inline constexpr std::size_t lanes = 8;
inline vec load(const double* p) { return _mm512_loadu_pd(p); }
inline void store(double* p, vec v) { _mm512_storeu_pd(p, v); }
inline vec splat(double x) { return _mm512_set1_pd(x); }
inline vec fma(vec a, vec b, vec c) { return _mm512_fmadd_pd(a, b, c); }
#elif defined(__AVX2__) && defined(__FMA__)
using vec = __m256d;
inline constexpr std::size_t lanes = 4;
inline vec load(const double* p) { return _mm256_loadu_pd(p); }
inline void store(double* p, vec v) { _mm256_storeu_pd(p, v); }
inline vec splat(double x) { return _mm256_set1_pd(x); }
inline vec fma(vec a, vec b, vec c) { return _mm256_fmadd_pd(a, b, c); }
#else
struct vec {
  double x;
};
inline constexpr std::size_t lanes = 1;
inline vec load(const double* p) { return {*p}; }
inline void store(double* p, vec v) { *p = v.x; }
inline vec splat(double x) { return {x}; }
inline vec fma(vec a, vec b, vec c) { return {std::fma(a.x, b.x, c.x)}; }
#endif

}  // namespace simd

namespace detail {

inline constexpr std::size_t kRows = 4;  // rows of a register block
inline constexpr std::size_t kVecs = 4;  // vectors per row of a register block

// c[R x V lanes] = a[R x k] * b[k x V lanes]
template <std::size_t R, std::size_t V>
inline void block_nn(const double* a, std::size_t lda, const double* b, std::size_t ldb,
                     double* c, std::size_t ldc, std::size_t k) {
  simd::vec acc[R][V];
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t v = 0; v < V; ++v) acc[r][v] = simd::splat(0.0);
  for (std::size_t p = 0; p < k; ++p) {
    simd::vec bv[V];
    for (std::size_t v = 0; v < V; ++v) bv[v] = simd::load(b + p * ldb + v * simd::lanes);
    for (std::size_t r = 0; r < R; ++r) {
      const simd::vec av = simd::splat(a[r * lda + p]);
      for (std::size_t v = 0; v < V; ++v) acc[r][v] = simd::fma(av, bv[v], acc[r][v]);
    }
  }
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t v = 0; v < V; ++v) simd::store(c + r * ldc + v * simd::lanes, acc[r][v]);
}

inline void tail_nn(const double* a, std::size_t lda, const double* b, std::size_t ldb,
                    double* c, std::size_t ldc, std::size_t rows, std::size_t cols,
                    std::size_t k) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc = std::fma(a[r * lda + p], b[p * ldb + j], acc);
      c[r * ldc + j] = acc;
    }
  }
}

// One block row of c: wide blocks, then single vectors, then scalars.
template <std::size_t R>
inline void row_nn(const double* a, std::size_t k, const double* b, double* c, std::size_t n) {
  std::size_t j = 0;
  for (; j + kVecs * simd::lanes <= n; j += kVecs * simd::lanes)
    block_nn<R, kVecs>(a, k, b + j, n, c + j, n, k);
  for (; j + simd::lanes <= n; j += simd::lanes) block_nn<R, 1>(a, k, b + j, n, c + j, n, k);
  if (j < n) tail_nn(a, k, b + j, n, c + j, n, R, n - j, k);
}

// c[R x V lanes] += sum over rows r of a[r, p0..p0+R)^T b[r, j0..j0+V lanes)
template <std::size_t R, std::size_t V>
inline void block_tn(const double* a, std::size_t lda, const double* b, std::size_t ldb,
                     double* c, std::size_t ldc, std::size_t m) {
  simd::vec acc[R][V];
  for (std::size_t p = 0; p < R; ++p)
    for (std::size_t v = 0; v < V; ++v) acc[p][v] = simd::load(c + p * ldc + v * simd::lanes);
  for (std::size_t r = 0; r < m; ++r) {
    simd::vec bv[V];
    for (std::size_t v = 0; v < V; ++v) bv[v] = simd::load(b + r * ldb + v * simd::lanes);
    for (std::size_t p = 0; p < R; ++p) {
      const simd::vec av = simd::splat(a[r * lda + p]);
      for (std::size_t v = 0; v < V; ++v) acc[p][v] = simd::fma(av, bv[v], acc[p][v]);
    }
  }
  for (std::size_t p = 0; p < R; ++p)
    for (std::size_t v = 0; v < V; ++v) simd::store(c + p * ldc + v * simd::lanes, acc[p][v]);
}

inline void tail_tn(const double* a, std::size_t lda, const double* b, std::size_t ldb,
                    double* c, std::size_t ldc, std::size_t m, std::size_t rows,
                    std::size_t cols) {
  for (std::size_t p = 0; p < rows; ++p)
    for (std::size_t j = 0; j < cols; ++j) {
      double acc = c[p * ldc + j];
      for (std::size_t r = 0; r < m; ++r) acc = std::fma(a[r * lda + p], b[r * ldb + j], acc);
      c[p * ldc + j] = acc;
    }
}

template <std::size_t R>
inline void row_tn(const double* a, std::size_t k, const double* b, double* c, std::size_t n,
                   std::size_t m) {
  std::size_t j = 0;
  for (; j + kVecs * simd::lanes <= n; j += kVecs * simd::lanes)
    block_tn<R, kVecs>(a, k, b + j, n, c + j, n, m);
  for (; j + simd::lanes <= n; j += simd::lanes) block_tn<R, 1>(a, k, b + j, n, c + j, n, m);
  if (j < n) tail_tn(a, k, b + j, n, c + j, n, m, R, n - j);
}

}  // namespace detail

/// c[m x n] = a[m x k] * b[k x n]; c is overwritten.
inline void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n) {
  using detail::kRows;
  const std::size_t m_main = m - m % kRows;
  for (std::size_t i = 0; i < m_main; i += kRows) detail::row_nn<kRows>(a + i * k, k, b, c + i * n, n);
  for (std::size_t i = m_main; i < m; ++i) detail::row_nn<1>(a + i * k, k, b, c + i * n, n);
}

/// c[k x n] += a[m x k]^T * b[m x n], summing over rows of a and b in order.
/// Rows are swept in cache-sized chunks; each chunk resumes from the
/// partial sums left in c, so the order of additions is unchanged.
inline void matmul_tn_accumulate(const double* a, const double* b, double* c, std::size_t m,
                                 std::size_t k, std::size_t n) {
  using detail::kRows;
  constexpr std::size_t kChunk = 128;
  const std::size_t k_main = k - k % kRows;
  for (std::size_t r0 = 0; r0 < m; r0 += kChunk) {
    const std::size_t rows = r0 + kChunk < m ? kChunk : m - r0;
    const double* ac = a + r0 * k;
    const double* bc = b + r0 * n;
    for (std::size_t p = 0; p < k_main; p += kRows) detail::row_tn<kRows>(ac + p, k, bc, c + p * n, n, rows);
    for (std::size_t p = k_main; p < k; ++p) detail::row_tn<1>(ac + p, k, bc, c + p * n, n, rows);
  }
}

/// out[n x m] = in[m x n]^T.
inline void transpose(const double* in, double* out, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = in[i * n + j];
}

}  // namespace sthgcn::ad::kernels
