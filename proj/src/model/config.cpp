#include "dmae/model/config.hpp"

#include <cmath>
#include <string>

#include "dmae/errors.hpp"

namespace dmae::model {

ModelConfig ModelConfig::paper() { return ModelConfig{}; }

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.img_size = 64;
  c.patch_size = 8;
  c.enc_dim = 128;
  c.enc_depth = 4;
  c.enc_heads = 4;
  c.dec_dim = 64;
  c.dec_depth = 2;
  c.dec_heads = 4;
  c.cls_head_hidden = 128;
  return c;
}

std::size_t visible_count(std::size_t n_patches, double mask_ratio) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n_patches) * (1.0 - mask_ratio)));
}

std::size_t ModelConfig::n_visible() const { return visible_count(n_patches(), mask_ratio); }

void ModelConfig::validate() const {
  if (patch_size == 0 || img_size == 0 || img_size % patch_size != 0) {
    throw ConfigError("model: img_size " + std::to_string(img_size) + " not divisible by patch_size " +
                      std::to_string(patch_size));
  }
  if (in_channels == 0) throw ConfigError("model: in_channels must be positive");
  if (enc_heads == 0 || enc_dim % enc_heads != 0) throw ConfigError("model: enc_dim not divisible by enc_heads");
  if (dec_heads == 0 || dec_dim % dec_heads != 0) throw ConfigError("model: dec_dim not divisible by dec_heads");
  if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) throw ConfigError("model: mask_ratio must lie in (0, 1)");
  const std::size_t nv = n_visible();
  if (nv == 0 || nv >= n_patches()) {
    throw ConfigError("model: mask_ratio " + std::to_string(mask_ratio) + " leaves " + std::to_string(nv) + " of " +
                      std::to_string(n_patches()) + " patches visible");
  }
  if (n_downstream_classes == 0) throw ConfigError("model: n_downstream_classes must be positive");
  if (mlp_ratio == 0) throw ConfigError("model: mlp_ratio must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model: dropout must lie in [0, 1)");
}

}  // namespace dmae::model
