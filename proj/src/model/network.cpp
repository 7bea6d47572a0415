#include "dmae/model/network.hpp"

#include <optional>
#include <string>

#include "dmae/errors.hpp"
#include "dmae/model/patches.hpp"
#include "dmae/rng.hpp"
#include "dmae/tensor/ops.hpp"

namespace dmae::model {

namespace ops = dmae::tensor;

namespace {

constexpr double kInitStd = 0.02;

std::uint64_t name_hash(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Initializer {
 public:
  Initializer(ParamStore<float>& store, std::uint64_t seed) : store_(store), seed_(seed) {}

  void trunc_normal(const std::string& name, tensor::Shape shape, bool decay) {
    Rng rng(derive_seed(seed_, {name_hash(name)}));
    std::vector<float> v(tensor::numel(shape));
    for (auto& x : v) {
      double z = rng.normal();
      while (z < -2.0 || z > 2.0) z = rng.normal();
      x = static_cast<float>(z * kInitStd);
    }
    store_.add(name, Tensor<float>::from(std::move(shape), std::move(v)), decay);
  }

  void constant(const std::string& name, tensor::Shape shape, float value) {
    store_.add(name, Tensor<float>::full(std::move(shape), value), false);
  }

  void linear(const std::string& prefix, std::size_t in, std::size_t out) {
    trunc_normal(prefix + ".weight", {in, out}, true);
    constant(prefix + ".bias", {out}, 0.0f);
  }

  void norm(const std::string& prefix, std::size_t dim) {
    constant(prefix + ".weight", {dim}, 1.0f);
    constant(prefix + ".bias", {dim}, 0.0f);
  }

  void block(const std::string& prefix, std::size_t dim, std::size_t mlp_ratio) {
    norm(prefix + ".norm1", dim);
    linear(prefix + ".attn.q", dim, dim);
    linear(prefix + ".attn.k", dim, dim);
    linear(prefix + ".attn.v", dim, dim);
    linear(prefix + ".attn.proj", dim, dim);
    norm(prefix + ".norm2", dim);
    linear(prefix + ".mlp.fc1", dim, dim * mlp_ratio);
    linear(prefix + ".mlp.fc2", dim * mlp_ratio, dim);
  }

 private:
  ParamStore<float>& store_;
  std::uint64_t seed_;
};

void add_encoder(Initializer& init, const ModelConfig& cfg) {
  init.linear("encoder.patch_embed", cfg.patch_dim(), cfg.enc_dim);
  if (cfg.pos_embed) init.trunc_normal("encoder.pos_embed", {cfg.n_patches(), cfg.enc_dim}, false);
  for (std::size_t i = 0; i < cfg.enc_depth; ++i)
    init.block("encoder.blocks." + std::to_string(i), cfg.enc_dim, cfg.mlp_ratio);
  init.norm("encoder.norm", cfg.enc_dim);
}

template <class T>
const Tensor<T>& P(const ParamStore<T>& params, const std::string& name) {
  return params.get(name);
}

template <class T>
Tensor<T> linear(const ParamStore<T>& params, const std::string& prefix, const Tensor<T>& x) {
  return ops::linear(x, P(params, prefix + ".weight"), P(params, prefix + ".bias"));
}

template <class T>
Tensor<T> norm(const ParamStore<T>& params, const std::string& prefix, const Tensor<T>& x) {
  return ops::layer_norm(x, P(params, prefix + ".weight"), P(params, prefix + ".bias"));
}

template <class T>
Tensor<T> drop(const Tensor<T>& x, double p, const ForwardMode& mode, std::uint64_t site) {
  if (!mode.train || p <= 0.0) return x;
  return ops::dropout(x, static_cast<T>(p), derive_seed(mode.dropout_seed, {site}), true);
}

template <class T>
Tensor<T> block(const ParamStore<T>& params, const std::string& prefix, const Tensor<T>& x, std::size_t heads,
                std::size_t seq_len, double p, const ForwardMode& mode) {
  const std::uint64_t site = name_hash(prefix);
  auto h = norm(params, prefix + ".norm1", x);
  auto a = ops::attention(linear(params, prefix + ".attn.q", h), linear(params, prefix + ".attn.k", h),
                          linear(params, prefix + ".attn.v", h), heads, seq_len);
  auto x1 = ops::add(x, drop(linear(params, prefix + ".attn.proj", a), p, mode, site));
  auto m = ops::gelu(linear(params, prefix + ".mlp.fc1", norm(params, prefix + ".norm2", x1)));
  return ops::add(x1, drop(linear(params, prefix + ".mlp.fc2", m), p, mode, site + 1));
}

template <class T>
Tensor<T> visible_rows(std::span<const Image> images, const ModelConfig& cfg, std::span<const MaskPlan> plans,
                       std::vector<std::size_t>& ids) {
  const std::size_t pd = cfg.patch_dim();
  std::vector<T> data;
  ids.clear();
  for (std::size_t b = 0; b < images.size(); ++b) {
    const auto rows = patchify(images[b], cfg.patch_size);
    for (std::size_t id : plans[b].visible_ids) {
      ids.push_back(id);
      for (std::size_t j = 0; j < pd; ++j) data.push_back(static_cast<T>(rows[id * pd + j]));
    }
  }
  const std::size_t n = ids.size();
  return Tensor<T>::from({n, pd}, std::move(data));
}

void check_images(std::span<const Image> images, const ModelConfig& cfg, const char* what) {
  for (const auto& img : images) {
    if (img.channels != cfg.in_channels || img.height != cfg.img_size || img.width != cfg.img_size) {
      throw DimensionError(std::string(what) + ": image " + std::to_string(img.channels) + "x" +
                           std::to_string(img.height) + "x" + std::to_string(img.width) + " does not match model " +
                           std::to_string(cfg.in_channels) + "x" + std::to_string(cfg.img_size) + "x" +
                           std::to_string(cfg.img_size));
    }
  }
}

}  // namespace

ParamStore<float> init_pretrain_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParamStore<float> store;
  Initializer init(store, seed);
  add_encoder(init, cfg);
  init.linear("decoder.embed", cfg.enc_dim, cfg.dec_dim);
  init.trunc_normal("decoder.mask_token", {1, cfg.dec_dim}, false);
  if (cfg.pos_embed) init.trunc_normal("decoder.pos_embed", {cfg.n_patches(), cfg.dec_dim}, false);
  for (std::size_t i = 0; i < cfg.dec_depth; ++i)
    init.block("decoder.blocks." + std::to_string(i), cfg.dec_dim, cfg.mlp_ratio);
  init.norm("decoder.norm", cfg.dec_dim);
  init.linear("decoder.pred", cfg.dec_dim, cfg.patch_dim());
  if (cfg.cls_head_hidden == 0) {
    init.linear("cls_head.fc", cfg.enc_dim, cfg.n_position_classes());
  } else {
    init.linear("cls_head.fc1", cfg.enc_dim, cfg.cls_head_hidden);
    init.linear("cls_head.fc2", cfg.cls_head_hidden, cfg.n_position_classes());
  }
  return store;
}

ParamStore<float> init_finetune_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParamStore<float> store;
  Initializer init(store, seed);
  add_encoder(init, cfg);
  init.linear("head", cfg.enc_dim, cfg.n_downstream_classes);
  return store;
}

bool is_encoder_param(std::string_view name) { return name.starts_with("encoder."); }

std::uint64_t mask_seed(std::uint64_t seed, std::size_t sample) { return derive_seed(seed, {0x4D41534BULL, sample}); }

template <class T>
Tensor<T> patch_rows(std::span<const Image> images, const ModelConfig& cfg) {
  check_images(images, cfg, "patch_rows");
  std::vector<T> data;
  data.reserve(images.size() * cfg.n_patches() * cfg.patch_dim());
  for (const auto& img : images) {
    const auto rows = patchify(img, cfg.patch_size);
    for (float v : rows) data.push_back(static_cast<T>(v));
  }
  return Tensor<T>::from({images.size() * cfg.n_patches(), cfg.patch_dim()}, std::move(data));
}

template <class T>
Tensor<T> encode(const ParamStore<T>& params, const ModelConfig& cfg, const Tensor<T>& visible_patches,
                 std::span<const std::size_t> ids, std::size_t seq_len, const ForwardMode& mode) {
  if (visible_patches.rank() != 2 || visible_patches.dim(1) != cfg.patch_dim()) {
    throw DimensionError("encode: patches " + tensor::shape_str(visible_patches.shape()));
  }
  if (ids.size() != visible_patches.dim(0)) throw DimensionError("encode: one index per patch row required");
  if (seq_len == 0 || ids.size() % seq_len != 0) throw DimensionError("encode: rows not a multiple of seq_len");
  for (std::size_t id : ids) {
    if (id >= cfg.n_patches()) throw IndexError("encode: patch index " + std::to_string(id) + " out of range");
  }
  auto x = linear(params, "encoder.patch_embed", visible_patches);
  if (cfg.pos_embed) x = ops::add(x, ops::gather_rows(P(params, std::string("encoder.pos_embed")), ids));
  for (std::size_t i = 0; i < cfg.enc_depth; ++i)
    x = block(params, "encoder.blocks." + std::to_string(i), x, cfg.enc_heads, seq_len, cfg.dropout, mode);
  return norm(params, "encoder.norm", x);
}

template <class T>
Tensor<T> decode(const ParamStore<T>& params, const ModelConfig& cfg, const Tensor<T>& q_v,
                 std::span<const MaskPlan> plans, const ForwardMode& mode) {
  const std::size_t n = cfg.n_patches();
  const std::size_t nv = cfg.n_visible();
  if (q_v.rank() != 2 || q_v.dim(1) != cfg.enc_dim || q_v.dim(0) != plans.size() * nv) {
    throw DimensionError("decode: q_v " + tensor::shape_str(q_v.shape()) + " does not match " +
                         std::to_string(plans.size()) + " plans of " + std::to_string(nv) + " visible patches");
  }
  const std::size_t mask_row = plans.size() * nv;
  std::vector<std::size_t> index(plans.size() * n, mask_row);
  std::vector<std::size_t> pos;
  pos.reserve(plans.size() * n);
  for (std::size_t b = 0; b < plans.size(); ++b) {
    const auto& plan = plans[b];
    if (plan.n_patches != n || plan.visible_ids.size() != nv) throw DimensionError("decode: plan does not match model");
    for (std::size_t k = 0; k < nv; ++k) index[b * n + plan.visible_ids[k]] = b * nv + k;
    for (std::size_t p = 0; p < n; ++p) pos.push_back(p);
  }
  auto table = ops::concat_rows(linear(params, "decoder.embed", q_v), P(params, std::string("decoder.mask_token")));
  auto x = ops::gather_rows(table, index);
  if (cfg.pos_embed) x = ops::add(x, ops::gather_rows(P(params, std::string("decoder.pos_embed")), pos));
  for (std::size_t i = 0; i < cfg.dec_depth; ++i)
    x = block(params, "decoder.blocks." + std::to_string(i), x, cfg.dec_heads, n, cfg.dropout, mode);
  return linear(params, "decoder.pred", norm(params, "decoder.norm", x));
}

template <class T>
Tensor<T> classify_patches(const ParamStore<T>& params, const ModelConfig& cfg, const Tensor<T>& q_v) {
  if (cfg.cls_head_hidden == 0) return linear(params, "cls_head.fc", q_v);
  return linear(params, "cls_head.fc2", ops::gelu(linear(params, "cls_head.fc1", q_v)));
}

template <class T>
PretrainOutput<T> forward_pretrain(const ParamStore<T>& params, const ModelConfig& cfg, const losses::LossWeights& w,
                                   std::span<const Image> noisy, std::span<const Image> clean,
                                   std::span<const MaskPlan> plans, const ForwardMode& mode) {
  if (noisy.size() != clean.size() || noisy.size() != plans.size() || noisy.empty()) {
    throw DimensionError("forward_pretrain: need equal, non-zero numbers of noisy images, clean images and plans");
  }
  check_images(noisy, cfg, "forward_pretrain");
  check_images(clean, cfg, "forward_pretrain");
  const std::size_t n = cfg.n_patches();
  const std::size_t nv = cfg.n_visible();

  PretrainOutput<T> out;
  out.plans.assign(plans.begin(), plans.end());
  std::vector<std::size_t> ids;
  auto visible = visible_rows<T>(noisy, cfg, plans, ids);
  auto q_v = encode(params, cfg, visible, ids, nv, mode);

  std::vector<std::size_t> masked_rows;
  for (std::size_t b = 0; b < plans.size(); ++b) {
    for (std::size_t id : plans[b].masked_ids) masked_rows.push_back(b * n + id);
    for (std::size_t label : plans[b].position_labels) out.labels.push_back(label);
  }
  const auto target = patch_rows<T>(clean, cfg);

  {
    std::optional<tensor::NoGradGuard> off;
    if (w.lambda_rec == 0.0) off.emplace();
    out.recon = decode(params, cfg, q_v, plans, mode);
    out.rec = losses::rec_loss(out.recon, target, masked_rows);
  }
  {
    std::optional<tensor::NoGradGuard> off;
    if (w.lambda_cls == 0.0) off.emplace();
    out.logits = classify_patches(params, cfg, q_v);
    out.cls = losses::cls_loss(out.logits, out.labels);
  }
  out.total = losses::total_loss(out.rec, out.cls, w);
  return out;
}

template <class T>
PretrainOutput<T> forward_pretrain(const ParamStore<T>& params, const ModelConfig& cfg, const losses::LossWeights& w,
                                   std::span<const Image> noisy, std::span<const Image> clean, std::uint64_t seed,
                                   const ForwardMode& mode) {
  std::vector<MaskPlan> plans;
  plans.reserve(noisy.size());
  for (std::size_t b = 0; b < noisy.size(); ++b)
    plans.push_back(plan_mask(cfg.n_patches(), cfg.mask_ratio, mask_seed(seed, b)));
  return forward_pretrain(params, cfg, w, noisy, clean, std::span<const MaskPlan>(plans), mode);
}

template <class T>
Tensor<T> encode_pooled(const ParamStore<T>& params, const ModelConfig& cfg, std::span<const Image> images,
                        std::span<const MaskPlan> plans, const ForwardMode& mode) {
  check_images(images, cfg, "encode_pooled");
  if (images.empty()) throw DimensionError("encode_pooled: empty batch");
  if (plans.empty()) {
    const std::size_t n = cfg.n_patches();
    std::vector<std::size_t> ids(images.size() * n);
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i % n;
    return ops::mean_pool(encode(params, cfg, patch_rows<T>(images, cfg), ids, n, mode), n);
  }
  if (plans.size() != images.size()) throw DimensionError("encode_pooled: one plan per image required");
  std::vector<std::size_t> ids;
  auto visible = visible_rows<T>(images, cfg, plans, ids);
  const std::size_t len = plans.front().visible_ids.size();
  return ops::mean_pool(encode(params, cfg, visible, ids, len, mode), len);
}

template <class T>
Tensor<T> forward_finetune(const ParamStore<T>& params, const ModelConfig& cfg, std::span<const Image> images,
                           const ForwardMode& mode) {
  return linear(params, "head", encode_pooled(params, cfg, images, {}, mode));
}

#define DMAE_INSTANTIATE_NETWORK(T)                                                                                    \
  template Tensor<T> patch_rows<T>(std::span<const Image>, const ModelConfig&);                                        \
  template Tensor<T> encode<T>(const ParamStore<T>&, const ModelConfig&, const Tensor<T>&, std::span<const std::size_t>, \
                               std::size_t, const ForwardMode&);                                                       \
  template Tensor<T> decode<T>(const ParamStore<T>&, const ModelConfig&, const Tensor<T>&, std::span<const MaskPlan>,  \
                               const ForwardMode&);                                                                    \
  template Tensor<T> classify_patches<T>(const ParamStore<T>&, const ModelConfig&, const Tensor<T>&);                  \
  template PretrainOutput<T> forward_pretrain<T>(const ParamStore<T>&, const ModelConfig&, const losses::LossWeights&, \
                                                 std::span<const Image>, std::span<const Image>,                       \
                                                 std::span<const MaskPlan>, const ForwardMode&);                       \
  template PretrainOutput<T> forward_pretrain<T>(const ParamStore<T>&, const ModelConfig&, const losses::LossWeights&, \
                                                 std::span<const Image>, std::span<const Image>, std::uint64_t,        \
                                                 const ForwardMode&);                                                  \
  template Tensor<T> encode_pooled<T>(const ParamStore<T>&, const ModelConfig&, std::span<const Image>,                \
                                      std::span<const MaskPlan>, const ForwardMode&);                                  \
  template Tensor<T> forward_finetune<T>(const ParamStore<T>&, const ModelConfig&, std::span<const Image>,             \
                                         const ForwardMode&);

DMAE_INSTANTIATE_NETWORK(float)
DMAE_INSTANTIATE_NETWORK(double)

}  // namespace dmae::model
