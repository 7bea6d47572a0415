#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dmae/kernels/kernels.hpp"
#include "dmae/rng.hpp"

using namespace dmae;
using kernels::KernelTable;

namespace {

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

// Naive double-accumulated oracle.
std::vector<double> gemm_oracle(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
                                const std::vector<float>& a, std::size_t lda, const std::vector<float>& b,
                                std::size_t ldb, double beta, const std::vector<float>& c, std::size_t ldc) {
  std::vector<double> out(c.begin(), c.end());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ta ? a[p * lda + i] : a[i * lda + p];
        const double bv = tb ? b[j * ldb + p] : b[p * ldb + j];
        s += av * bv;
      }
      out[i * ldc + j] = alpha * s + beta * static_cast<double>(c[i * ldc + j]);
    }
  return out;
}

std::vector<const KernelTable*> tables() {
  std::vector<const KernelTable*> t = {&kernels::scalar_table()};
  if (kernels::avx2_table() != nullptr) t.push_back(kernels::avx2_table());
  return t;
}

struct GemmCase {
  std::size_t m, n, k;
  bool ta, tb;
  float alpha, beta;
};

}  // namespace

TEST(Kernels, GemmMatchesOracleForEveryTable) {
  const std::vector<GemmCase> cases = {
      {1, 1, 1, false, false, 1.0f, 0.0f},   {4, 16, 8, false, false, 1.0f, 0.0f},
      {5, 17, 9, false, false, 0.5f, 1.0f},  {13, 31, 7, true, false, 1.0f, 0.0f},
      {13, 31, 7, false, true, -1.5f, 0.25f}, {33, 3, 65, true, true, 1.0f, 1.0f},
      {64, 48, 192, false, false, 1.0f, 0.0f}, {7, 129, 3, false, true, 2.0f, 0.0f},
  };
  for (const auto* t : tables()) {
    for (const auto& c : cases) {
      const std::size_t lda = c.ta ? c.m : c.k;
      const std::size_t ldb = c.tb ? c.k : c.n;
      const auto a = random_vec(c.m * c.k, 1 + c.m);
      const auto b = random_vec(c.k * c.n, 2 + c.n);
      auto out = random_vec(c.m * c.n, 3 + c.k);
      const auto expect = gemm_oracle(c.ta, c.tb, c.m, c.n, c.k, c.alpha, a, lda, b, ldb, c.beta, out, c.n);
      t->gemm(c.ta, c.tb, c.m, c.n, c.k, c.alpha, a.data(), lda, b.data(), ldb, c.beta, out.data(), c.n);
      for (std::size_t i = 0; i < out.size(); ++i)
        ASSERT_NEAR(out[i], expect[i], 1e-4 * (1.0 + std::abs(expect[i])))
            << kernels::isa_name(t->isa) << " m=" << c.m << " n=" << c.n << " k=" << c.k << " i=" << i;
    }
  }
}

TEST(Kernels, GemmBetaZeroIgnoresNanInOutput) {
  for (const auto* t : tables()) {
    const auto a = random_vec(6 * 5, 4);
    const auto b = random_vec(5 * 20, 5);
    std::vector<float> c(6 * 20, std::nanf(""));
    t->gemm(false, false, 6, 20, 5, 1.0f, a.data(), 5, b.data(), 20, 0.0f, c.data(), 20);
    for (float v : c) EXPECT_TRUE(std::isfinite(v)) << kernels::isa_name(t->isa);
  }
}

TEST(Kernels, VectorKernelsAgreeAcrossTables) {
  const auto& ref = kernels::scalar_table();
  for (const auto* t : tables()) {
    for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 31u, 64u, 1000u}) {
      const auto x = random_vec(n, 10 + n);
      const auto y = random_vec(n, 20 + n);

      auto y1 = y, y2 = y;
      ref.axpy(n, 0.75f, x.data(), y1.data());
      t->axpy(n, 0.75f, x.data(), y2.data());
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-6);

      EXPECT_NEAR(ref.dot(n, x.data(), y.data()), t->dot(n, x.data(), y.data()), 1e-4);
      EXPECT_NEAR(ref.sum(n, x.data()), t->sum(n, x.data()), 1e-4);

      std::vector<float> o1(n), o2(n);
      ref.add(n, x.data(), y.data(), o1.data());
      t->add(n, x.data(), y.data(), o2.data());
      for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(o1[i], o2[i]);
      ref.mul(n, x.data(), y.data(), o1.data());
      t->mul(n, x.data(), y.data(), o2.data());
      for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(o1[i], o2[i]);

      auto s1 = x, s2 = x;
      ref.scale(n, -2.5f, s1.data());
      t->scale(n, -2.5f, s2.data());
      for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(s1[i], s2[i]);
    }
  }
}

TEST(Kernels, DotMatchesDoubleOracle) {
  const auto x = random_vec(777, 31);
  const auto y = random_vec(777, 32);
  double expect = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) expect += static_cast<double>(x[i]) * y[i];
  for (const auto* t : tables()) EXPECT_NEAR(t->dot(x.size(), x.data(), y.data()), expect, 1e-4);
}

TEST(Kernels, SelectSwitchesActiveTable) {
  const auto before = kernels::active().isa;
  kernels::select(kernels::Isa::scalar);
  EXPECT_EQ(kernels::active().isa, kernels::Isa::scalar);
  if (kernels::avx2_table() != nullptr) {
    kernels::select(kernels::Isa::avx2);
    EXPECT_EQ(kernels::active().isa, kernels::Isa::avx2);
  }
  kernels::select(before);
}

TEST(Kernels, DoublePathMatchesOracle) {
  const std::size_t m = 5, n = 6, k = 7;
  const auto af = random_vec(m * k, 41);
  const auto bf = random_vec(k * n, 42);
  std::vector<double> a(af.begin(), af.end()), b(bf.begin(), bf.end()), c(m * n, 0.0);
  kernels::gemm(false, false, m, n, k, 1.0, a.data(), k, b.data(), n, 0.0, c.data(), n);
  const auto expect = gemm_oracle(false, false, m, n, k, 1.0, af, k, bf, n, 0.0, std::vector<float>(m * n), n);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c[i], expect[i], 1e-12);
}
