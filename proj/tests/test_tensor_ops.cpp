#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "dmae/errors.hpp"
#include "dmae/rng.hpp"
#include "dmae/tensor/ops.hpp"

using namespace dmae;
using namespace dmae::tensor;
using TD = Tensor<double>;

namespace {

TD rand_t(Shape shape, std::uint64_t seed, bool grad = true, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return TD::from(std::move(shape), std::move(v), grad);
}

// Central-difference check of d f / d inputs for a scalar-valued f.
void expect_grad(const std::function<TD(std::vector<TD>&)>& f, std::vector<TD> inputs, double tol = 1e-7) {
  for (auto& x : inputs) x.zero_grad();
  f(inputs).backward();
  const double h = 1e-6;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    if (!inputs[t].requires_grad()) continue;
    std::vector<double> analytic(inputs[t].numel(), 0.0);
    if (inputs[t].has_grad()) analytic.assign(inputs[t].grad().begin(), inputs[t].grad().end());
    auto data = inputs[t].mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      double up, down;
      {
        NoGradGuard g;
        data[i] = orig + h;
        up = f(inputs).item();
        data[i] = orig - h;
        down = f(inputs).item();
      }
      data[i] = orig;
      const double numeric = (up - down) / (2 * h);
      EXPECT_NEAR(analytic[i], numeric, tol * (1.0 + std::abs(numeric))) << "input " << t << " element " << i;
    }
  }
}

// Weighted sum so every output element gets a distinct upstream gradient.
TD probe(const TD& y, std::uint64_t seed = 99) {
  auto w = rand_t(y.shape(), seed, false);
  return sum(mul(y, w));
}

}  // namespace

TEST(Tensor, FactoriesAndShapes) {
  auto z = TD::zeros({2, 3});
  EXPECT_EQ(z.numel(), 6u);
  EXPECT_EQ(shape_str(z.shape()), "[2, 3]");
  EXPECT_EQ(TD::scalar(4.0).item(), 4.0);
  EXPECT_THROW(TD::from({2, 2}, {1.0, 2.0}), DimensionError);
}

TEST(Tensor, NoGradGuardStopsRecording) {
  auto a = rand_t({3}, 1);
  {
    NoGradGuard g;
    EXPECT_FALSE(grad_enabled());
    auto b = scale(a, 2.0);
    EXPECT_FALSE(b.requires_grad());
  }
  EXPECT_TRUE(grad_enabled());
  EXPECT_TRUE(scale(a, 2.0).requires_grad());
}

TEST(Tensor, BackwardAccumulatesThroughSharedNodes) {
  auto a = TD::from({1}, {3.0}, true);
  auto y = add(mul(a, a), a);  // a^2 + a
  sum(y).backward();
  EXPECT_DOUBLE_EQ(a.grad()[0], 7.0);
}

TEST(Tensor, CheckFiniteNamesTheTensor) {
  std::vector<double> v = {1.0, std::nan("")};
  try {
    check_finite<double>(v, "weights");
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("weights"), std::string::npos);
  }
}

TEST(Ops, MatmulForwardAndGrad) {
  auto a = rand_t({2, 3, 4}, 1);
  auto b = rand_t({4, 5}, 2);
  auto c = matmul(a, b);
  ASSERT_EQ(c.shape(), (Shape{2, 3, 5}));
  double s = 0.0;
  for (int k = 0; k < 4; ++k) s += a.at(1 * 12 + 2 * 4 + k) * b.at(k * 5 + 3);
  EXPECT_NEAR(c.at(1 * 15 + 2 * 5 + 3), s, 1e-12);
  expect_grad([](auto& in) { return probe(matmul(in[0], in[1])); }, {a, b});
  auto bb = rand_t({2, 4, 5}, 3);
  expect_grad([](auto& in) { return probe(matmul(in[0], in[1])); }, {a, bb});
  EXPECT_THROW(matmul(a, rand_t({3, 5}, 4)), DimensionError);
}

TEST(Ops, LinearWithAndWithoutBias) {
  auto x = rand_t({4, 3}, 1);
  auto w = rand_t({3, 2}, 2);
  auto b = rand_t({2}, 3);
  auto y = linear(x, w, b);
  EXPECT_NEAR(y.at(0), x.at(0) * w.at(0) + x.at(1) * w.at(2) + x.at(2) * w.at(4) + b.at(0), 1e-12);
  expect_grad([](auto& in) { return probe(linear(in[0], in[1], in[2])); }, {x, w, b});
  expect_grad([](auto& in) { return probe(linear(in[0], in[1], TD())); }, {x, w});
}

TEST(Ops, BroadcastAddSubMul) {
  auto a = rand_t({2, 3, 4}, 1);
  auto b = rand_t({3, 4}, 2);
  auto c = rand_t({4}, 3);
  EXPECT_NEAR(add(a, b).at(12 + 5), a.at(17) + b.at(5), 1e-15);
  expect_grad([](auto& in) { return probe(add(in[0], in[1])); }, {a, b});
  expect_grad([](auto& in) { return probe(add(in[0], in[1])); }, {a, c});
  expect_grad([](auto& in) { return probe(sub(in[0], in[1])); }, {a, rand_t({2, 3, 4}, 4)});
  expect_grad([](auto& in) { return probe(mul(in[0], in[1])); }, {a, rand_t({2, 3, 4}, 5)});
  EXPECT_THROW(add(a, rand_t({5}, 6)), DimensionError);
}

TEST(Ops, ScaleSquareSumMean) {
  auto a = rand_t({3, 3}, 1);
  EXPECT_DOUBLE_EQ(scale(a, 3.0).at(4), 3.0 * a.at(4));
  EXPECT_DOUBLE_EQ(square(a).at(2), a.at(2) * a.at(2));
  double s = 0.0;
  for (auto v : a.data()) s += v;
  EXPECT_NEAR(sum(a).item(), s, 1e-14);
  EXPECT_NEAR(mean(a).item(), s / 9.0, 1e-14);
  expect_grad([](auto& in) { return mean(square(scale(in[0], 1.7))); }, {a});
}

TEST(Ops, GeluUsesErf) {
  auto x = TD::from({3}, {-1.0, 0.0, 2.0}, true);
  auto y = gelu(x);
  for (std::size_t i = 0; i < 3; ++i) {
    const double v = x.at(i);
    EXPECT_NEAR(y.at(i), 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))), 1e-15);
  }
  expect_grad([](auto& in) { return probe(gelu(in[0])); }, {rand_t({10}, 2, true, -3, 3)});
}

TEST(Ops, LayerNormOracleAndGrad) {
  auto x = rand_t({3, 5}, 1);
  auto g = rand_t({5}, 2);
  auto b = rand_t({5}, 3);
  auto y = layer_norm(x, g, b);
  double m = 0, v = 0;
  for (int j = 0; j < 5; ++j) m += x.at(5 + j);
  m /= 5;
  for (int j = 0; j < 5; ++j) v += (x.at(5 + j) - m) * (x.at(5 + j) - m);
  v /= 5;
  EXPECT_NEAR(y.at(5 + 2), (x.at(7) - m) / std::sqrt(v + 1e-6) * g.at(2) + b.at(2), 1e-12);
  expect_grad([](auto& in) { return probe(layer_norm(in[0], in[1], in[2])); }, {x, g, b});
}

TEST(Ops, SoftmaxRowsSumToOne) {
  auto x = rand_t({4, 6}, 1, true, -5, 5);
  auto y = softmax(x);
  for (int r = 0; r < 4; ++r) {
    double s = 0;
    for (int j = 0; j < 6; ++j) s += y.at(r * 6 + j);
    EXPECT_NEAR(s, 1.0, 1e-14);
  }
  expect_grad([](auto& in) { return probe(softmax(in[0])); }, {x});
}

TEST(Ops, SoftmaxCrossEntropyMatchesLogSumExp) {
  auto logits = rand_t({5, 7}, 1, true, -4, 4);
  const std::vector<std::size_t> labels = {0, 6, 3, 3, 1};
  double expect = 0.0;
  for (int r = 0; r < 5; ++r) {
    double lse = 0.0;
    for (int j = 0; j < 7; ++j) lse += std::exp(logits.at(r * 7 + j));
    expect += std::log(lse) - logits.at(r * 7 + labels[r]);
  }
  expect /= 5.0;
  EXPECT_NEAR(softmax_cross_entropy(logits, std::span<const std::size_t>(labels)).item(), expect, 1e-12);
  expect_grad([&](auto& in) { return softmax_cross_entropy(in[0], std::span<const std::size_t>(labels)); }, {logits});
  const std::vector<std::size_t> bad = {0, 7, 0, 0, 0};
  EXPECT_THROW(softmax_cross_entropy(logits, std::span<const std::size_t>(bad)), IndexError);
}

TEST(Ops, SoftmaxCrossEntropyIsStableForLargeLogits) {
  auto logits = TD::from({1, 3}, {1000.0, 0.0, -1000.0});
  const std::vector<std::size_t> labels = {0};
  EXPECT_NEAR(softmax_cross_entropy(logits, std::span<const std::size_t>(labels)).item(), 0.0, 1e-12);
}

TEST(Ops, AttentionMatchesDirectFormula) {
  const std::size_t seq = 3, d = 4, heads = 2, dh = 2;
  auto q = rand_t({2 * seq, d}, 1);
  auto k = rand_t({2 * seq, d}, 2);
  auto v = rand_t({2 * seq, d}, 3);
  auto out = attention(q, k, v, heads, seq);
  // Sequence 1, row 2, head 1.
  const std::size_t b = 1, i = 2, h = 1;
  std::vector<double> s(seq);
  double mx = -1e300;
  for (std::size_t j = 0; j < seq; ++j) {
    double acc = 0;
    for (std::size_t c = 0; c < dh; ++c) acc += q.at((b * seq + i) * d + h * dh + c) * k.at((b * seq + j) * d + h * dh + c);
    s[j] = acc / std::sqrt(static_cast<double>(dh));
    mx = std::max(mx, s[j]);
  }
  double z = 0;
  for (auto& e : s) z += (e = std::exp(e - mx));
  for (std::size_t c = 0; c < dh; ++c) {
    double o = 0;
    for (std::size_t j = 0; j < seq; ++j) o += s[j] / z * v.at((b * seq + j) * d + h * dh + c);
    EXPECT_NEAR(out.at((b * seq + i) * d + h * dh + c), o, 1e-12);
  }
  expect_grad([](auto& in) { return probe(attention(in[0], in[1], in[2], 2, 3)); }, {q, k, v});
  EXPECT_THROW(attention(q, k, v, 3, seq), ConfigError);
}

TEST(Ops, ReshapeGatherConcat) {
  auto x = rand_t({4, 3}, 1);
  EXPECT_EQ(reshape(x, {2, 6}).shape(), (Shape{2, 6}));
  EXPECT_THROW(reshape(x, {5, 2}), DimensionError);
  const std::vector<std::size_t> idx = {3, 0, 3, 1};
  auto g = gather_rows(x, idx);
  EXPECT_EQ(g.at(3 * 0 + 1), x.at(3 * 3 + 1));
  expect_grad([&](auto& in) { return probe(gather_rows(in[0], std::span<const std::size_t>(idx))); }, {x});
  const std::vector<std::size_t> bad = {4};
  EXPECT_THROW(gather_rows(x, std::span<const std::size_t>(bad)), IndexError);
  auto y = rand_t({2, 3}, 2);
  auto c = concat_rows(x, y);
  EXPECT_EQ(c.shape(), (Shape{6, 3}));
  EXPECT_EQ(c.at(4 * 3 + 2), y.at(2));
  expect_grad([](auto& in) { return probe(concat_rows(in[0], in[1])); }, {x, y});
}

TEST(Ops, MeanPool) {
  auto x = rand_t({6, 2}, 1);
  auto p = mean_pool(x, 3);
  ASSERT_EQ(p.shape(), (Shape{2, 2}));
  EXPECT_NEAR(p.at(2 + 1), (x.at(7) + x.at(9) + x.at(11)) / 3.0, 1e-15);
  expect_grad([](auto& in) { return probe(mean_pool(in[0], 3)); }, {x});
}

TEST(Ops, DropoutTrainOnly) {
  auto x = rand_t({1000}, 1);
  auto eval = dropout(x, 0.5, 7, false);
  for (std::size_t i = 0; i < 1000; ++i) EXPECT_EQ(eval.at(i), x.at(i));
  auto train = dropout(x, 0.5, 7, true);
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < 1000; ++i) {
    if (train.at(i) == 0.0) {
      ++zeros;
    } else {
      EXPECT_NEAR(train.at(i), 2.0 * x.at(i), 1e-15);
    }
  }
  EXPECT_GT(zeros, 400u);
  EXPECT_LT(zeros, 600u);
  expect_grad([](auto& in) { return probe(dropout(in[0], 0.3, 11, true)); }, {rand_t({20}, 2)});
}

TEST(Ops, FloatMatchesDouble) {
  auto a = rand_t({3, 8}, 1, false);
  auto w = rand_t({8, 5}, 2, false);
  auto af = cast<float>(a, false);
  auto wf = cast<float>(w, false);
  auto yd = gelu(matmul(a, w));
  auto yf = gelu(matmul(af, wf));
  for (std::size_t i = 0; i < yd.numel(); ++i) EXPECT_NEAR(yf.at(i), yd.at(i), 1e-5);
}
