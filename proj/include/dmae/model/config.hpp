#pragma once

#include <cstddef>

namespace dmae::model {

struct ModelConfig {
  std::size_t img_size = 224;
  std::size_t patch_size = 16;
  std::size_t in_channels = 3;
  std::size_t enc_dim = 768;
  std::size_t enc_depth = 12;
  std::size_t enc_heads = 12;
  std::size_t dec_dim = 512;
  std::size_t dec_depth = 8;
  std::size_t dec_heads = 8;
  double mask_ratio = 0.75;
  std::size_t cls_head_hidden = 768;  // 0 = single linear layer
  std::size_t n_downstream_classes = 10;
  std::size_t mlp_ratio = 4;
  double dropout = 0.0;
  bool pos_embed = true;  // learned positional embeddings in encoder and decoder

  static ModelConfig paper();
  // img 64, patch 8, encoder 128/4/4, decoder 64/2/4.
  static ModelConfig desk();

  void validate() const;

  std::size_t grid() const { return img_size / patch_size; }
  std::size_t n_patches() const { return grid() * grid(); }
  std::size_t patch_dim() const { return patch_size * patch_size * in_channels; }
  std::size_t n_visible() const;
  // (img_size / patch_size)^2 * (1 - mask_ratio), rounded to an integer;
  // one class per visible patch.
  std::size_t n_position_classes() const { return n_visible(); }
};

std::size_t visible_count(std::size_t n_patches, double mask_ratio);

}  // namespace dmae::model
