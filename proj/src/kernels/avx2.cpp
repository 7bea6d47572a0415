#include <immintrin.h>

#include <vector>

#include "dmae/kernels/kernels.hpp"

namespace dmae::kernels {

namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

// 4 rows x 16 columns register tile.
inline void tile_4x16(std::size_t k, float alpha, const float* a, std::size_t lda, const float* b, std::size_t ldb,
                      float* c, std::size_t ldc) {
  __m256 c00 = _mm256_setzero_ps(), c01 = _mm256_setzero_ps();
  __m256 c10 = _mm256_setzero_ps(), c11 = _mm256_setzero_ps();
  __m256 c20 = _mm256_setzero_ps(), c21 = _mm256_setzero_ps();
  __m256 c30 = _mm256_setzero_ps(), c31 = _mm256_setzero_ps();
  const float* a0 = a;
  const float* a1 = a + lda;
  const float* a2 = a + 2 * lda;
  const float* a3 = a + 3 * lda;
  for (std::size_t p = 0; p < k; ++p) {
    const float* brow = b + p * ldb;
    const __m256 b0 = _mm256_loadu_ps(brow);
    const __m256 b1 = _mm256_loadu_ps(brow + 8);
    __m256 av = _mm256_broadcast_ss(a0 + p);
    c00 = _mm256_fmadd_ps(av, b0, c00);
    c01 = _mm256_fmadd_ps(av, b1, c01);
    av = _mm256_broadcast_ss(a1 + p);
    c10 = _mm256_fmadd_ps(av, b0, c10);
    c11 = _mm256_fmadd_ps(av, b1, c11);
    av = _mm256_broadcast_ss(a2 + p);
    c20 = _mm256_fmadd_ps(av, b0, c20);
    c21 = _mm256_fmadd_ps(av, b1, c21);
    av = _mm256_broadcast_ss(a3 + p);
    c30 = _mm256_fmadd_ps(av, b0, c30);
    c31 = _mm256_fmadd_ps(av, b1, c31);
  }
  const __m256 al = _mm256_set1_ps(alpha);
  auto store = [&](float* row, __m256 lo, __m256 hi) {
    _mm256_storeu_ps(row, _mm256_fmadd_ps(al, lo, _mm256_loadu_ps(row)));
    _mm256_storeu_ps(row + 8, _mm256_fmadd_ps(al, hi, _mm256_loadu_ps(row + 8)));
  };
  store(c, c00, c01);
  store(c + ldc, c10, c11);
  store(c + 2 * ldc, c20, c21);
  store(c + 3 * ldc, c30, c31);
}

inline void tile_1x16(std::size_t k, float alpha, const float* a, const float* b, std::size_t ldb, float* c) {
  __m256 c0 = _mm256_setzero_ps(), c1 = _mm256_setzero_ps();
  for (std::size_t p = 0; p < k; ++p) {
    const float* brow = b + p * ldb;
    const __m256 av = _mm256_broadcast_ss(a + p);
    c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow), c0);
    c1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + 8), c1);
  }
  const __m256 al = _mm256_set1_ps(alpha);
  _mm256_storeu_ps(c, _mm256_fmadd_ps(al, c0, _mm256_loadu_ps(c)));
  _mm256_storeu_ps(c + 8, _mm256_fmadd_ps(al, c1, _mm256_loadu_ps(c + 8)));
}

inline void tile_1x8(std::size_t k, float alpha, const float* a, const float* b, std::size_t ldb, float* c) {
  __m256 c0 = _mm256_setzero_ps();
  for (std::size_t p = 0; p < k; ++p) {
    c0 = _mm256_fmadd_ps(_mm256_broadcast_ss(a + p), _mm256_loadu_ps(b + p * ldb), c0);
  }
  _mm256_storeu_ps(c, _mm256_fmadd_ps(_mm256_set1_ps(alpha), c0, _mm256_loadu_ps(c)));
}

inline void tile_1xr(std::size_t k, std::size_t cols, float alpha, const float* a, const float* b, std::size_t ldb,
                     float* c) {
  float acc[8] = {};
  for (std::size_t p = 0; p < k; ++p) {
    const float av = a[p];
    const float* brow = b + p * ldb;
    for (std::size_t j = 0; j < cols; ++j) acc[j] += av * brow[j];
  }
  for (std::size_t j = 0; j < cols; ++j) c[j] += alpha * acc[j];
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, float alpha, const float* a, std::size_t lda,
             const float* b, std::size_t ldb, float* c, std::size_t ldc) {
  std::size_t j = 0;
  for (; j + 16 <= n; j += 16) {
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) tile_4x16(k, alpha, a + i * lda, lda, b + j, ldb, c + i * ldc + j, ldc);
    for (; i < m; ++i) tile_1x16(k, alpha, a + i * lda, b + j, ldb, c + i * ldc + j);
  }
  for (; j + 8 <= n; j += 8) {
    for (std::size_t i = 0; i < m; ++i) tile_1x8(k, alpha, a + i * lda, b + j, ldb, c + i * ldc + j);
  }
  if (j < n) {
    for (std::size_t i = 0; i < m; ++i) tile_1xr(k, n - j, alpha, a + i * lda, b + j, ldb, c + i * ldc + j);
  }
}

void transpose_into(std::vector<float>& dst, const float* src, std::size_t rows, std::size_t cols, std::size_t ld) {
  // src is rows x cols with leading dimension ld; dst becomes cols x rows.
  dst.resize(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* s = src + r * ld;
    for (std::size_t cidx = 0; cidx < cols; ++cidx) dst[cidx * rows + r] = s[cidx];
  }
}

void gemm_avx2(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, float alpha, const float* a,
               std::size_t lda, const float* b, std::size_t ldb, float beta, float* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    float* row = c + i * ldc;
    if (beta == 0.0f) {
      for (std::size_t j = 0; j < n; ++j) row[j] = 0.0f;
    } else if (beta != 1.0f) {
      for (std::size_t j = 0; j < n; ++j) row[j] *= beta;
    }
  }
  if (k == 0 || m == 0 || n == 0) return;

  thread_local std::vector<float> packed_a;
  thread_local std::vector<float> packed_b;
  if (ta) {
    transpose_into(packed_a, a, k, m, lda);
    a = packed_a.data();
    lda = k;
  }
  if (tb) {
    transpose_into(packed_b, b, n, k, ldb);
    b = packed_b.data();
    ldb = n;
  }
  gemm_nn(m, n, k, alpha, a, lda, b, ldb, c, ldc);
}

void axpy_avx2(std::size_t n, float alpha, const float* x, float* y) {
  const __m256 al = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(al, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

float dot_avx2(std::size_t n, const float* x, const float* y) {
  __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8) acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
  float s = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void add_avx2(std::size_t n, const float* x, const float* y, float* out) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void mul_avx2(std::size_t n, const float* x, const float* y, float* out) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void scale_avx2(std::size_t n, float alpha, float* x) {
  const __m256 al = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(x + i, _mm256_mul_ps(al, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

float sum_avx2(std::size_t n, const float* x) {
  __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_add_ps(acc0, _mm256_loadu_ps(x + i));
    acc1 = _mm256_add_ps(acc1, _mm256_loadu_ps(x + i + 8));
  }
  for (; i + 8 <= n; i += 8) acc0 = _mm256_add_ps(acc0, _mm256_loadu_ps(x + i));
  float s = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) s += x[i];
  return s;
}

const KernelTable kAvx2{Isa::avx2, gemm_avx2, axpy_avx2, dot_avx2, add_avx2,
                        mul_avx2,  scale_avx2, sum_avx2};

}  // namespace

const KernelTable* avx2_table_compiled() { return &kAvx2; }

}  // namespace dmae::kernels
