#include "dmae/kernels/kernels.hpp"
#include "reference.hpp"

namespace dmae::kernels {

namespace {

void gemm_f32(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, float alpha, const float* a,
              std::size_t lda, const float* b, std::size_t ldb, float beta, float* c, std::size_t ldc) {
  reference::gemm<float>(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

const KernelTable kScalar{
    Isa::scalar,           gemm_f32,
    reference::axpy<float>, reference::dot<float>,
    reference::add<float>,  reference::mul<float>,
    reference::scale<float>, reference::sum<float>,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

void gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, double alpha, const double* a,
          std::size_t lda, const double* b, std::size_t ldb, double beta, double* c, std::size_t ldc) {
  reference::gemm<double>(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}
void axpy(std::size_t n, double alpha, const double* x, double* y) { reference::axpy(n, alpha, x, y); }
double dot(std::size_t n, const double* x, const double* y) { return reference::dot(n, x, y); }
void add(std::size_t n, const double* x, const double* y, double* out) { reference::add(n, x, y, out); }
void mul(std::size_t n, const double* x, const double* y, double* out) { reference::mul(n, x, y, out); }
void scale(std::size_t n, double alpha, double* x) { reference::scale(n, alpha, x); }
double sum(std::size_t n, const double* x) { return reference::sum(n, x); }

}  // namespace dmae::kernels
