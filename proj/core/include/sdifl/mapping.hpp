#pragma once

#include <cstdint>
#include <set>
#include <string>

#include "sdifl/image.hpp"
#include "sdifl/nn/activation.hpp"
#include "sdifl/nn/attention.hpp"
#include "sdifl/nn/conv.hpp"
#include "sdifl/nn/linear.hpp"

namespace sdifl {

struct LmmConfig {
  int blocks = 4;
  int width = 64;
  bool operator==(const LmmConfig&) const = default;
};

struct FlmmConfig {
  int patch = 4;  // equal to the codec factor so tokens align with latent cells
  int dim = 64;
  int depth = 2;
  int heads = 4;
  int mlp_ratio = 2;
  int out_channels = 16;  // c_f
  bool operator==(const FlmmConfig&) const = default;
};

// Ablation switches; the codec one is handled by the training engine.
struct Ablation {
  bool no_srm_flmm = false;  // Z_f := 0
  bool no_vae_lmm = false;   // image-latent branch := 0
  bool no_lmm = false;       // Z_i passed straight to fusion
  bool no_codec_pretrain = false;

  bool operator==(const Ablation&) const = default;
  std::set<std::string> names() const;
  static Ablation from_names(const std::set<std::string>& names);  // throws UsageError
};

struct MappingConfig {
  int latent_channels = 16;
  int grid_height = 16;  // native latent grid, sizes the positional table
  int grid_width = 16;
  LmmConfig lmm;
  FlmmConfig flmm;
  std::uint64_t seed = 1;
  bool operator==(const MappingConfig&) const = default;
};

template <class T>
struct LmmTape {
  std::vector<nn::ConvCache<T>> c1, c2;
  std::vector<nn::FeatureMap<T>> hidden;  // pre-activation of each block
};

// Shape-preserving residual conv stack over the latent grid:
// x <- x + conv2(SiLU(conv1(x))). conv2 starts at zero, so a fresh LMM is
// the identity map.
template <class T>
class Lmm {
 public:
  Lmm() = default;
  Lmm(int channels, const LmmConfig& cfg, Rng& rng);

  nn::FeatureMap<T> forward(const nn::FeatureMap<T>& z, LmmTape<T>* tape = nullptr) const;
  nn::FeatureMap<T> backward(const nn::FeatureMap<T>& grad, const LmmTape<T>& tape);
  nn::ParamRefs<T> parameters();
  int channels() const { return channels_; }

 private:
  int channels_ = 0;
  std::vector<nn::Conv2d<T>> conv1_, conv2_;
};

template <class T>
struct BlockTape {
  nn::LayerNormCache<T> ln1, ln2;
  nn::AttentionCache<T> attn;
  nn::Mat<T> ln1_out, ln2_out, x1, mlp_hidden;
};

template <class T>
struct FlmmTape {
  int grid_h = 0, grid_w = 0;
  nn::Mat<T> patches;
  std::vector<BlockTape<T>> blocks;
  nn::LayerNormCache<T> ln;
  nn::Mat<T> ln_out;
};

// Patchify (p x p x 3 residual patches, row-major token order) -> linear
// embedding + positional table -> pre-norm transformer blocks -> LayerNorm ->
// projection to c_f channels on the (H/p) x (W/p) grid.
template <class T>
class Flmm {
 public:
  Flmm() = default;
  Flmm(const FlmmConfig& cfg, int grid_h, int grid_w, Rng& rng);

  // `residual` is 3 x H x W. Grids other than the native one reuse a
  // bilinearly resampled positional table (inference only).
  nn::FeatureMap<T> forward(const nn::FeatureMap<T>& residual, FlmmTape<T>* tape = nullptr) const;
  void backward(const nn::FeatureMap<T>& grad, const FlmmTape<T>& tape);
  nn::ParamRefs<T> parameters();
  const FlmmConfig& config() const { return cfg_; }

 private:
  nn::Mat<T> positional(int gh, int gw) const;

  FlmmConfig cfg_;
  int grid_h_ = 0, grid_w_ = 0;
  nn::Linear<T> embed_;
  nn::Parameter<T> pos_;
  struct Block {
    nn::LayerNorm<T> ln1, ln2;
    nn::SelfAttention<T> attn;
    nn::Linear<T> fc1, fc2;
  };
  std::vector<Block> blocks_;
  nn::LayerNorm<T> ln_;
  nn::Linear<T> head_;
};

template <class T>
struct FusionTape {
  nn::ConvCache<T> proj;
};

// Channel concatenation followed by a 1x1 projection back to c'.
template <class T>
class Fusion {
 public:
  Fusion() = default;
  Fusion(int latent_channels, int residual_channels, Rng& rng);

  nn::FeatureMap<T> forward(const nn::FeatureMap<T>& z_lmm, const nn::FeatureMap<T>& z_f,
                            FusionTape<T>* tape = nullptr) const;
  // Returns (dL/dz_lmm, dL/dz_f).
  std::pair<nn::FeatureMap<T>, nn::FeatureMap<T>> backward(const nn::FeatureMap<T>& grad,
                                                           const FusionTape<T>& tape);
  nn::ParamRefs<T> parameters() { return proj_.parameters(); }
  nn::Conv2d<T>& projection() { return proj_; }

 private:
  int latent_channels_ = 0, residual_channels_ = 0;
  nn::Conv2d<T> proj_;
};

template <class T>
struct MappingTape {
  LmmTape<T> lmm;
  FlmmTape<T> flmm;
  FusionTape<T> fusion;
};

// LMM + FLMM + fusion with ablation wiring. Produces the predicted mask
// latent from the image latent and the residual stack.
template <class T>
class MappingNets {
 public:
  MappingNets() = default;
  MappingNets(const MappingConfig& cfg, const Ablation& ablation);

  nn::FeatureMap<T> forward(const nn::FeatureMap<T>& z_image, const nn::FeatureMap<T>& residual,
                            MappingTape<T>* tape = nullptr) const;
  void backward(const nn::FeatureMap<T>& grad_zhat, const MappingTape<T>& tape);

  // Every trainable tensor, in checkpoint order (LMM, FLMM, fusion). Branches
  // disabled by ablation still appear; they simply receive zero gradient.
  nn::ParamRefs<T> parameters();
  std::vector<const nn::Parameter<T>*> parameters() const;
  // Parameters of the branches the ablation leaves active.
  nn::ParamRefs<T> trainable_parameters();

  Lmm<T>& lmm() { return lmm_; }
  Flmm<T>& flmm() { return flmm_; }
  Fusion<T>& fusion() { return fusion_; }
  const MappingConfig& config() const { return cfg_; }
  const Ablation& ablation() const { return ablation_; }

 private:
  MappingConfig cfg_;
  Ablation ablation_;
  Lmm<T> lmm_;
  Flmm<T> flmm_;
  Fusion<T> fusion_;
};

extern template class Lmm<float>;
extern template class Lmm<double>;
extern template class Flmm<float>;
extern template class Flmm<double>;
extern template class Fusion<float>;
extern template class Fusion<double>;
extern template class MappingNets<float>;
extern template class MappingNets<double>;

}  // namespace sdifl
