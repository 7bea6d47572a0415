#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dmae/errors.hpp"
#include "dmae/kernels/kernels.hpp"
#include "dmae/model/gradcheck.hpp"
#include "dmae/model/mask.hpp"
#include "dmae/model/network.hpp"
#include "dmae/model/patches.hpp"
#include "dmae/rng.hpp"
#include "dmae/tensor/ops.hpp"

using namespace dmae;
using namespace dmae::model;
using tensor::cast_params;

namespace {

ModelConfig tiny() {
  ModelConfig c;
  c.img_size = 32;
  c.patch_size = 8;
  c.enc_dim = 16;
  c.enc_depth = 2;
  c.enc_heads = 2;
  c.dec_dim = 16;
  c.dec_depth = 1;
  c.dec_heads = 2;
  c.cls_head_hidden = 16;
  return c;
}

Image random_image(const ModelConfig& cfg, std::uint64_t seed) {
  Image img(cfg.in_channels, cfg.img_size, cfg.img_size);
  Rng rng(seed);
  for (auto& p : img.pixels) p = static_cast<float>(rng.uniform());
  return img;
}

std::vector<Image> images(const ModelConfig& cfg, std::size_t n, std::uint64_t seed) {
  std::vector<Image> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_image(cfg, seed + i));
  return out;
}

ParamStore<double> jittered(const ParamStore<float>& p, std::uint64_t seed) {
  auto d = cast_params<double>(p);
  Rng rng(seed);
  for (auto& e : d.entries())
    for (auto& v : e.value.mutable_data()) v += 0.1 * rng.normal();
  return d;
}

std::vector<double> row(const Tensor<double>& t, std::size_t r) {
  const std::size_t w = t.dim(1);
  return {t.data().begin() + static_cast<std::ptrdiff_t>(r * w), t.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * w)};
}

void expect_rows_near(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol);
}

}  // namespace

TEST(Config, PaperAndDeskShapes) {
  auto p = ModelConfig::paper();
  p.validate();
  EXPECT_EQ(p.n_patches(), 196u);
  EXPECT_EQ(p.patch_dim(), 768u);
  EXPECT_EQ(p.n_position_classes(), 49u);
  EXPECT_EQ(p.cls_head_hidden, 768u);
  auto d = ModelConfig::desk();
  d.validate();
  EXPECT_EQ(d.n_patches(), 64u);
  EXPECT_EQ(d.n_position_classes(), 16u);
  auto bad = d;
  bad.enc_heads = 3;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = d;
  bad.img_size = 60;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = d;
  bad.mask_ratio = 1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Patches, LayoutAndRoundTrip) {
  Image img(3, 224, 224);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<float>(i % 977) / 977.0f;
  auto rows = patchify(img, 16);
  EXPECT_EQ(rows.size(), 196u * 768u);
  auto back = unpatchify(rows, 3, 224, 224, 16);
  EXPECT_EQ(back.pixels, img.pixels);

  Image one(3, 32, 32);
  one.at(2, 13, 21) = 1.0f;
  auto r = patchify(one, 8);
  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r[i] != 0.0f) hits.push_back(i);
  ASSERT_EQ(hits.size(), 1u);
  const std::size_t patch = (13 / 8) * 4 + 21 / 8;
  EXPECT_EQ(hits[0], patch * 192 + ((13 % 8) * 8 + 21 % 8) * 3 + 2);
  EXPECT_THROW(unpatchify(r, 3, 32, 32, 7), ConfigError);
}

TEST(Mask, CountsPartitionAndDeterminism) {
  auto plan = plan_mask(196, 0.75, 123);
  EXPECT_EQ(plan.visible_ids.size(), 49u);
  EXPECT_EQ(plan.masked_ids.size(), 147u);
  std::vector<std::size_t> all = plan.visible_ids;
  all.insert(all.end(), plan.masked_ids.begin(), plan.masked_ids.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 196; ++i) EXPECT_EQ(all[i], i);
  EXPECT_TRUE(std::is_sorted(plan.visible_ids.begin(), plan.visible_ids.end()));
  EXPECT_EQ(plan_mask(196, 0.75, 123).visible_ids, plan.visible_ids);
  EXPECT_NE(plan_mask(196, 0.75, 124).visible_ids, plan.visible_ids);
}

TEST(Mask, BoundaryAndInvalidRatios) {
  auto one = plan_mask(4, 0.8, 1);  // round(0.8) = 1 visible
  EXPECT_EQ(one.visible_ids.size(), 1u);
  EXPECT_EQ(one.masked_ids.size(), 3u);
  EXPECT_THROW(plan_mask(4, 0.9, 1), ConfigError);
  EXPECT_THROW(plan_mask(4, 0.0, 1), ConfigError);
  EXPECT_THROW(plan_mask(4, 1.0, 1), ConfigError);
}

TEST(Mask, VisibleFrequencyIsUniform) {
  std::vector<std::size_t> hits(196, 0);
  for (std::uint64_t s = 0; s < 10000; ++s)
    for (auto id : plan_mask(196, 0.75, derive_seed(7, {s})).visible_ids) ++hits[id];
  for (auto h : hits) EXPECT_NEAR(static_cast<double>(h) / 10000.0, 0.25, 0.02);
}

TEST(Mask, PositionLabelsAreRanks) {
  MaskPlan plan;
  plan.n_patches = 64;
  plan.visible_ids = {3, 17, 40};
  EXPECT_EQ(position_labels(plan), (std::vector<std::size_t>{0, 1, 2}));
  const std::vector<std::size_t> order = {40, 3, 17};
  EXPECT_EQ(position_labels_for(plan, order), (std::vector<std::size_t>{2, 0, 1}));
  const std::vector<std::size_t> bad = {5};
  EXPECT_THROW(position_labels_for(plan, bad), IndexError);
  auto p = plan_mask(196, 0.75, 3);
  for (std::size_t k = 0; k < p.position_labels.size(); ++k) EXPECT_EQ(p.position_labels[k], k);
}

TEST(Network, ParameterNamesAndDecayFlags) {
  auto cfg = tiny();
  auto pre = init_pretrain_params(cfg, 1);
  auto ft = init_finetune_params(cfg, 2);
  std::set<std::string> enc_pre, enc_ft;
  for (const auto& e : pre.entries()) {
    if (is_encoder_param(e.name)) enc_pre.insert(e.name);
    const bool is_weight = e.value.rank() == 2 && e.name.ends_with(".weight");
    EXPECT_EQ(e.decay, is_weight) << e.name;
  }
  for (const auto& e : ft.entries()) {
    EXPECT_TRUE(is_encoder_param(e.name) || e.name.starts_with("head.")) << e.name;
    if (is_encoder_param(e.name)) {
      enc_ft.insert(e.name);
      EXPECT_EQ(e.value.shape(), pre.get(e.name).shape());
    }
  }
  EXPECT_EQ(enc_pre, enc_ft);
  EXPECT_TRUE(pre.contains("decoder.mask_token"));
  EXPECT_TRUE(pre.contains("cls_head.fc1.weight"));
  EXPECT_FALSE(pre.get("decoder.pos_embed").node().data.empty());
  // Initial values depend only on (seed, name).
  auto again = init_pretrain_params(cfg, 1);
  EXPECT_EQ(again.get("encoder.blocks.1.mlp.fc1.weight").data()[5], pre.get("encoder.blocks.1.mlp.fc1.weight").data()[5]);
  auto linear_head = cfg;
  linear_head.cls_head_hidden = 0;
  EXPECT_TRUE(init_pretrain_params(linear_head, 1).contains("cls_head.fc.weight"));
}

TEST(Network, InitStatistics) {
  auto pre = init_pretrain_params(ModelConfig::desk(), 4);
  const auto w = pre.get("encoder.blocks.0.mlp.fc1.weight").data();
  double m = 0, v = 0, mx = 0;
  for (float x : w) {
    m += x;
    mx = std::max(mx, std::abs(static_cast<double>(x)));
  }
  m /= static_cast<double>(w.size());
  for (float x : w) v += (x - m) * (x - m);
  v /= static_cast<double>(w.size());
  EXPECT_NEAR(m, 0.0, 1e-3);
  EXPECT_LE(mx, 0.04 + 1e-7);
  EXPECT_NEAR(std::sqrt(v), 0.0176, 0.001);  // sigma of a normal truncated at 2 sigma
  for (float x : pre.get("encoder.blocks.0.norm1.weight").data()) EXPECT_EQ(x, 1.0f);
  for (float x : pre.get("encoder.blocks.0.attn.q.bias").data()) EXPECT_EQ(x, 0.0f);
}

TEST(Network, PaperScaleShapes) {
  auto cfg = ModelConfig::paper();
  auto p = init_pretrain_params(cfg, 1);
  std::vector<Image> imgs = {random_image(cfg, 1)};
  tensor::NoGradGuard g;
  auto out = forward_pretrain<float>(p, cfg, {}, imgs, imgs, 5);
  EXPECT_EQ(out.recon.shape(), (tensor::Shape{196, 768}));
  EXPECT_EQ(out.logits.shape(), (tensor::Shape{49, 49}));
  auto ft = init_finetune_params(cfg, 1);
  EXPECT_EQ(forward_finetune<float>(ft, cfg, imgs).shape(), (tensor::Shape{1, 10}));
}

TEST(Network, EncodeIsPermutationEquivariantWithoutPositions) {
  auto cfg = tiny();
  cfg.pos_embed = false;
  auto p = jittered(init_pretrain_params(cfg, 3), 4);
  auto img = random_image(cfg, 9);
  auto rows = patch_rows<double>(std::span<const Image>(&img, 1), cfg);
  auto plan = plan_mask(cfg.n_patches(), cfg.mask_ratio, 11);
  std::vector<std::size_t> perm(plan.visible_ids.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[0], perm[2]);
  std::vector<std::size_t> ids_perm, rows_perm;
  for (auto k : perm) {
    ids_perm.push_back(plan.visible_ids[k]);
    rows_perm.push_back(plan.visible_ids[k]);
  }
  tensor::NoGradGuard g;
  auto vis = tensor::gather_rows(rows, std::span<const std::size_t>(plan.visible_ids));
  auto vis_perm = tensor::gather_rows(rows, std::span<const std::size_t>(rows_perm));
  auto a = encode(p, cfg, vis, plan.visible_ids, plan.visible_ids.size());
  auto b = encode(p, cfg, vis_perm, ids_perm, ids_perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) expect_rows_near(row(b, i), row(a, perm[i]), 1e-12);
}

TEST(Network, EncodeUsesOriginalIndexPositions) {
  auto cfg = tiny();
  auto p = jittered(init_pretrain_params(cfg, 3), 4);
  auto img = random_image(cfg, 9);
  auto rows = patch_rows<double>(std::span<const Image>(&img, 1), cfg);
  const std::vector<std::size_t> ids = {1, 5, 9, 12};
  tensor::NoGradGuard g;
  auto vis = tensor::gather_rows(rows, std::span<const std::size_t>(ids));
  const std::vector<std::size_t> other = {1, 5, 9, 13};
  auto a = encode(p, cfg, vis, ids, 4);
  auto b = encode(p, cfg, vis, other, 4);
  double diff = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) diff += std::abs(a.at(i) - b.at(i));
  EXPECT_GT(diff, 1e-6);
}

TEST(Network, EveryEncoderParameterGetsGradient) {
  auto cfg = tiny();
  auto p = init_pretrain_params(cfg, 5);
  auto imgs = images(cfg, 2, 40);
  auto noisy = images(cfg, 2, 50);
  auto out = forward_pretrain<float>(p, cfg, {}, noisy, imgs, 7);
  out.total.backward();
  for (const auto& e : p.entries()) {
    double n = 0;
    if (e.value.has_grad())
      for (float g : e.value.grad()) n += static_cast<double>(g) * g;
    if (e.name.ends_with("attn.k.bias")) {
      EXPECT_LT(std::sqrt(n), 1e-6) << e.name;
    } else {
      EXPECT_GT(n, 0.0) << e.name;
    }
  }
}

TEST(Network, MaskTokenRowsShareInput) {
  auto cfg = tiny();
  cfg.pos_embed = false;
  auto p = jittered(init_pretrain_params(cfg, 3), 8);
  auto imgs = images(cfg, 1, 3);
  auto plan = plan_mask(cfg.n_patches(), cfg.mask_ratio, 2);
  tensor::NoGradGuard g;
  auto out = forward_pretrain<double>(p, cfg, {}, imgs, imgs, std::span<const MaskPlan>(&plan, 1));
  const auto first = row(out.recon, plan.masked_ids[0]);
  for (auto id : plan.masked_ids) expect_rows_near(row(out.recon, id), first, 1e-12);
}

TEST(Network, SwappingMaskedPositionEmbeddingsSwapsReconstructions) {
  auto cfg = tiny();
  auto p = jittered(init_pretrain_params(cfg, 3), 8);
  auto img = random_image(cfg, 1);
  auto plan = plan_mask(cfg.n_patches(), cfg.mask_ratio, 4);
  tensor::NoGradGuard g;
  auto rows = patch_rows<double>(std::span<const Image>(&img, 1), cfg);
  auto vis = tensor::gather_rows(rows, std::span<const std::size_t>(plan.visible_ids));
  auto q = encode(p, cfg, vis, plan.visible_ids, plan.visible_ids.size());
  auto before = decode(p, cfg, q, std::span<const MaskPlan>(&plan, 1));

  const std::size_t i = plan.masked_ids[1], j = plan.masked_ids[6], w = cfg.dec_dim;
  auto pe = p.get("decoder.pos_embed").mutable_data();
  for (std::size_t c = 0; c < w; ++c) std::swap(pe[i * w + c], pe[j * w + c]);
  auto after = decode(p, cfg, q, std::span<const MaskPlan>(&plan, 1));
  expect_rows_near(row(after, i), row(before, j), 1e-12);
  expect_rows_near(row(after, j), row(before, i), 1e-12);
  expect_rows_near(row(after, plan.masked_ids[0]), row(before, plan.masked_ids[0]), 1e-12);
}

TEST(Network, ClassifierSharesWeightsAcrossTokens) {
  auto cfg = tiny();
  auto p = jittered(init_pretrain_params(cfg, 3), 8);
  std::vector<double> v(cfg.enc_dim);
  Rng rng(1);
  for (auto& x : v) x = rng.normal();
  std::vector<double> both = v;
  both.insert(both.end(), v.begin(), v.end());
  auto q = Tensor<double>::from({2, cfg.enc_dim}, both);
  auto logits = classify_patches(p, cfg, q);
  EXPECT_EQ(logits.shape(), (tensor::Shape{2, cfg.n_position_classes()}));
  expect_rows_near(row(logits, 0), row(logits, 1), 0.0);
}

TEST(Network, TotalCombinesBranchesAndLabelsMatchPlans) {
  auto cfg = tiny();
  auto p = init_pretrain_params(cfg, 3);
  auto clean = images(cfg, 3, 1);
  auto noisy = images(cfg, 3, 10);
  losses::LossWeights w{0.7, 0.3};
  auto out = forward_pretrain<float>(p, cfg, w, noisy, clean, 9);
  EXPECT_NEAR(out.total.item(), 0.7 * out.rec.item() + 0.3 * out.cls.item(), 1e-6);
  ASSERT_EQ(out.plans.size(), 3u);
  EXPECT_EQ(out.plans[1].visible_ids, plan_mask(cfg.n_patches(), cfg.mask_ratio, mask_seed(9, 1)).visible_ids);
  EXPECT_EQ(out.labels.size(), 3 * cfg.n_visible());
  EXPECT_EQ(out.labels[cfg.n_visible() + 2], 2u);
  EXPECT_EQ(out.recon.shape(), (tensor::Shape{3 * cfg.n_patches(), cfg.patch_dim()}));
}

TEST(Network, ZeroWeightBranchRecordsNoGraph) {
  auto cfg = tiny();
  auto p = init_pretrain_params(cfg, 3);
  auto imgs = images(cfg, 2, 1);
  auto out = forward_pretrain<float>(p, cfg, {1.0, 0.0}, imgs, imgs, 9);
  EXPECT_FALSE(out.cls.requires_grad());
  EXPECT_GT(out.cls.item(), 0.0f);
  out.total.backward();
  EXPECT_FALSE(p.get("cls_head.fc1.weight").has_grad());
}

TEST(Network, FinetuneIgnoresMaskingAndIsDeterministic) {
  auto cfg = tiny();
  auto p = init_finetune_params(cfg, 3);
  auto imgs = images(cfg, 4, 1);
  auto a = forward_finetune<float>(p, cfg, imgs);
  auto b = forward_finetune<float>(p, cfg, imgs, ForwardMode{false, 99});
  EXPECT_EQ(a.shape(), (tensor::Shape{4, 10}));
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_EQ(a.at(i), b.at(i));
}

TEST(Network, ScalarAndSimdKernelsAgree) {
  if (kernels::avx2_table() == nullptr) GTEST_SKIP() << "no AVX2";
  auto cfg = ModelConfig::desk();
  auto p = init_pretrain_params(cfg, 3);
  auto imgs = images(cfg, 2, 1);
  const auto before = kernels::active().isa;
  tensor::NoGradGuard g;
  kernels::select(kernels::Isa::scalar);
  auto a = forward_pretrain<float>(p, cfg, {}, imgs, imgs, 4);
  kernels::select(kernels::Isa::avx2);
  auto b = forward_pretrain<float>(p, cfg, {}, imgs, imgs, 4);
  kernels::select(before);
  EXPECT_NEAR(a.total.item(), b.total.item(), 1e-5);
  for (std::size_t i = 0; i < a.recon.numel(); ++i) ASSERT_NEAR(a.recon.at(i), b.recon.at(i), 1e-4);
}

TEST(Gradcheck, TinyConfigPasses) {
  auto report = gradcheck_pretrain(gradcheck_config(), losses::LossWeights{}, 1);
  EXPECT_LT(report.max_rel_error, 1e-5);
  EXPECT_FALSE(report.entries.empty());
}
