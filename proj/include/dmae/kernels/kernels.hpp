#pragma once

// Dense float kernels behind the tensor ops.
//
// Every kernel has a scalar reference implementation. When the library is
// built with DMAE_HAVE_AVX2 and the running CPU reports AVX2+FMA, an AVX2
// variant is selected at startup. Setting DMAE_KERNELS=scalar in the
// environment (or calling select()) forces the reference path.
//
// Double precision always runs the scalar reference; it exists for gradient
// checking only.

#include <cstddef>
#include <string_view>

namespace dmae::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;

  // C = alpha * op(A) * op(B) + beta * C, row-major.
  // op(A) is m x k, op(B) is k x n. With trans_a, A is stored k x m.
  void (*gemm)(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, float alpha,
               const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta, float* c,
               std::size_t ldc);

  // y += alpha * x
  void (*axpy)(std::size_t n, float alpha, const float* x, float* y);
  float (*dot)(std::size_t n, const float* x, const float* y);
  // out = x + y, out = x * y (out may alias x or y)
  void (*add)(std::size_t n, const float* x, const float* y, float* out);
  void (*mul)(std::size_t n, const float* x, const float* y, float* out);
  // x *= alpha
  void (*scale)(std::size_t n, float alpha, float* x);
  float (*sum)(std::size_t n, const float* x);
};

const KernelTable& scalar_table();
// nullptr when the AVX2 variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_table();

Isa detect();
const KernelTable& active();
void select(Isa isa);

// Precision-generic entry points used by the tensor ops.
inline void gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, float alpha, const float* a,
                 std::size_t lda, const float* b, std::size_t ldb, float beta, float* c, std::size_t ldc) {
  active().gemm(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}
void gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, double alpha, const double* a,
          std::size_t lda, const double* b, std::size_t ldb, double beta, double* c, std::size_t ldc);

inline void axpy(std::size_t n, float alpha, const float* x, float* y) { active().axpy(n, alpha, x, y); }
void axpy(std::size_t n, double alpha, const double* x, double* y);

inline float dot(std::size_t n, const float* x, const float* y) { return active().dot(n, x, y); }
double dot(std::size_t n, const double* x, const double* y);

inline void add(std::size_t n, const float* x, const float* y, float* out) { active().add(n, x, y, out); }
void add(std::size_t n, const double* x, const double* y, double* out);

inline void mul(std::size_t n, const float* x, const float* y, float* out) { active().mul(n, x, y, out); }
void mul(std::size_t n, const double* x, const double* y, double* out);

inline void scale(std::size_t n, float alpha, float* x) { active().scale(n, alpha, x); }
void scale(std::size_t n, double alpha, double* x);

inline float sum(std::size_t n, const float* x) { return active().sum(n, x); }
double sum(std::size_t n, const double* x);

}  // namespace dmae::kernels
