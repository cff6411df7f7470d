#include "sdifl/mapping.hpp"

#include <algorithm>
#include <cmath>

namespace sdifl {

std::set<std::string> Ablation::names() const {
  std::set<std::string> out;
  if (no_srm_flmm) out.insert("no_srm_flmm");
  if (no_vae_lmm) out.insert("no_vae_lmm");
  if (no_lmm) out.insert("no_lmm");
  if (no_codec_pretrain) out.insert("no_codec_pretrain");
  return out;
}

Ablation Ablation::from_names(const std::set<std::string>& names) {
  Ablation a;
  for (const auto& n : names) {
    if (n == "no_srm_flmm") a.no_srm_flmm = true;
    else if (n == "no_vae_lmm") a.no_vae_lmm = true;
    else if (n == "no_lmm") a.no_lmm = true;
    else if (n == "no_codec_pretrain") a.no_codec_pretrain = true;
    else throw UsageError("unknown ablation '" + n + "'");
  }
  return a;
}

// ---------------------------------------------------------------- LMM

template <class T>
Lmm<T>::Lmm(int channels, const LmmConfig& cfg, Rng& rng) : channels_(channels) {
  for (int b = 0; b < cfg.blocks; ++b) {
    const std::string base = "lmm.block" + std::to_string(b);
    conv1_.emplace_back(base + ".conv1", channels, cfg.width, 3, nn::Padding::kZero);
    conv1_.back().init(rng, 1.4);
    conv2_.emplace_back(base + ".conv2", cfg.width, channels, 3, nn::Padding::kZero);
    conv2_.back().zero_init();
  }
}

template <class T>
nn::FeatureMap<T> Lmm<T>::forward(const nn::FeatureMap<T>& z, LmmTape<T>* tape) const {
  nn::require_shape(z, channels_, "lmm");
  if (tape) {
    tape->c1.assign(conv1_.size(), {});
    tape->c2.assign(conv1_.size(), {});
    tape->hidden.assign(conv1_.size(), {});
  }
  nn::FeatureMap<T> x = z;
  for (std::size_t b = 0; b < conv1_.size(); ++b) {
    nn::FeatureMap<T> h = conv1_[b].forward(x, tape ? &tape->c1[b] : nullptr);
    const nn::FeatureMap<T> a(nn::silu(h.data), h.height, h.width);
    const nn::FeatureMap<T> r = conv2_[b].forward(a, tape ? &tape->c2[b] : nullptr);
    x.data += r.data;
    if (tape) tape->hidden[b] = std::move(h);
  }
  return x;
}

template <class T>
nn::FeatureMap<T> Lmm<T>::backward(const nn::FeatureMap<T>& grad, const LmmTape<T>& tape) {
  nn::FeatureMap<T> g = grad;
  for (std::size_t b = conv1_.size(); b-- > 0;) {
    nn::FeatureMap<T> ga = conv2_[b].backward(g, tape.c2[b]);
    ga.data = nn::silu_backward(tape.hidden[b].data, ga.data);
    const nn::FeatureMap<T> gx = conv1_[b].backward(ga, tape.c1[b]);
    g.data += gx.data;
  }
  return g;
}

template <class T>
nn::ParamRefs<T> Lmm<T>::parameters() {
  nn::ParamRefs<T> out;
  for (std::size_t b = 0; b < conv1_.size(); ++b) {
    for (auto* p : conv1_[b].parameters()) out.push_back(p);
    for (auto* p : conv2_[b].parameters()) out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------- FLMM

template <class T>
Flmm<T>::Flmm(const FlmmConfig& cfg, int grid_h, int grid_w, Rng& rng)
    : cfg_(cfg), grid_h_(grid_h), grid_w_(grid_w),
      embed_("flmm.embed", 3 * cfg.patch * cfg.patch, cfg.dim),
      pos_("flmm.pos", grid_h * grid_w, cfg.dim, false),
      ln_("flmm.norm", cfg.dim),
      head_("flmm.head", cfg.dim, cfg.out_channels) {
  embed_.init(rng);
  nn::fill_normal(pos_.value, rng, 0.02);
  for (int b = 0; b < cfg.depth; ++b) {
    const std::string base = "flmm.block" + std::to_string(b);
    Block blk{nn::LayerNorm<T>(base + ".ln1", cfg.dim), nn::LayerNorm<T>(base + ".ln2", cfg.dim),
              nn::SelfAttention<T>(base + ".attn", cfg.dim, cfg.heads),
              nn::Linear<T>(base + ".fc1", cfg.dim, cfg.dim * cfg.mlp_ratio),
              nn::Linear<T>(base + ".fc2", cfg.dim * cfg.mlp_ratio, cfg.dim)};
    blk.attn.init(rng);
    blk.fc1.init(rng, 1.4);
    blk.fc2.init(rng, 0.5);
    blocks_.push_back(std::move(blk));
  }
  head_.init(rng);
}

template <class T>
nn::Mat<T> Flmm<T>::positional(int gh, int gw) const {
  if (gh == grid_h_ && gw == grid_w_) return pos_.value;
  nn::Mat<T> out(gh * gw, cfg_.dim);
  auto src_coord = [](int i, int n_out, int n_in) {
    const double s = (i + 0.5) * n_in / n_out - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(n_in - 1));
  };
  for (int y = 0; y < gh; ++y) {
    const double sy = src_coord(y, gh, grid_h_);
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, grid_h_ - 1);
    const T fy = static_cast<T>(sy - y0);
    for (int x = 0; x < gw; ++x) {
      const double sx = src_coord(x, gw, grid_w_);
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, grid_w_ - 1);
      const T fx = static_cast<T>(sx - x0);
      out.row(y * gw + x) =
          (T(1) - fy) * ((T(1) - fx) * pos_.value.row(y0 * grid_w_ + x0) + fx * pos_.value.row(y0 * grid_w_ + x1)) +
          fy * ((T(1) - fx) * pos_.value.row(y1 * grid_w_ + x0) + fx * pos_.value.row(y1 * grid_w_ + x1));
    }
  }
  return out;
}

template <class T>
nn::FeatureMap<T> Flmm<T>::forward(const nn::FeatureMap<T>& residual, FlmmTape<T>* tape) const {
  nn::require_shape(residual, 3, "flmm");
  const int p = cfg_.patch;
  if (residual.height % p || residual.width % p) {
    throw ShapeError("residual size not divisible by patch size " + std::to_string(p));
  }
  const int gh = residual.height / p, gw = residual.width / p;
  nn::Mat<T> patches(gh * gw, 3 * p * p);
  for (int ty = 0; ty < gh; ++ty)
    for (int tx = 0; tx < gw; ++tx)
      for (int c = 0; c < 3; ++c)
        for (int dy = 0; dy < p; ++dy)
          for (int dx = 0; dx < p; ++dx)
            patches(ty * gw + tx, (c * p + dy) * p + dx) = residual.at(c, ty * p + dy, tx * p + dx);

  nn::Mat<T> x = embed_.forward(patches) + positional(gh, gw);
  if (tape) {
    tape->grid_h = gh;
    tape->grid_w = gw;
    tape->blocks.assign(blocks_.size(), {});
  }
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const Block& blk = blocks_[b];
    BlockTape<T>* bt = tape ? &tape->blocks[b] : nullptr;
    nn::Mat<T> a = blk.ln1.forward(x, bt ? &bt->ln1 : nullptr);
    nn::Mat<T> x1 = x + blk.attn.forward(a, bt ? &bt->attn : nullptr);
    nn::Mat<T> c = blk.ln2.forward(x1, bt ? &bt->ln2 : nullptr);
    nn::Mat<T> h = blk.fc1.forward(c);
    x = x1 + blk.fc2.forward(nn::gelu(h));
    if (bt) {
      bt->ln1_out = std::move(a);
      bt->x1 = std::move(x1);
      bt->ln2_out = std::move(c);
      bt->mlp_hidden = std::move(h);
    }
  }
  nn::Mat<T> n = ln_.forward(x, tape ? &tape->ln : nullptr);
  nn::Mat<T> out = head_.forward(n);
  if (tape) {
    tape->patches = std::move(patches);
    tape->ln_out = std::move(n);
  }
  return nn::FeatureMap<T>(nn::Mat<T>(out.transpose()), gh, gw);
}

template <class T>
void Flmm<T>::backward(const nn::FeatureMap<T>& grad, const FlmmTape<T>& tape) {
  if (tape.grid_h != grid_h_ || tape.grid_w != grid_w_) {
    throw ShapeError("flmm training requires the native token grid");
  }
  nn::Mat<T> g = head_.backward(nn::Mat<T>(grad.data.transpose()), tape.ln_out);
  g = ln_.backward(g, tape.ln);
  for (std::size_t b = blocks_.size(); b-- > 0;) {
    Block& blk = blocks_[b];
    const BlockTape<T>& bt = tape.blocks[b];
    const nn::Mat<T> gh = blk.fc2.backward(g, nn::gelu(bt.mlp_hidden));
    const nn::Mat<T> gc = blk.fc1.backward(nn::gelu_backward(bt.mlp_hidden, gh), bt.ln2_out);
    const nn::Mat<T> g1 = g + blk.ln2.backward(gc, bt.ln2);
    const nn::Mat<T> ga = blk.attn.backward(g1, bt.attn);
    g = g1 + blk.ln1.backward(ga, bt.ln1);
  }
  pos_.grad += g;
  embed_.backward(g, tape.patches);
}

template <class T>
nn::ParamRefs<T> Flmm<T>::parameters() {
  nn::ParamRefs<T> out = embed_.parameters();
  out.push_back(&pos_);
  for (auto& blk : blocks_) {
    for (auto* p : blk.ln1.parameters()) out.push_back(p);
    for (auto* p : blk.attn.parameters()) out.push_back(p);
    for (auto* p : blk.ln2.parameters()) out.push_back(p);
    for (auto* p : blk.fc1.parameters()) out.push_back(p);
    for (auto* p : blk.fc2.parameters()) out.push_back(p);
  }
  for (auto* p : ln_.parameters()) out.push_back(p);
  for (auto* p : head_.parameters()) out.push_back(p);
  return out;
}

// ---------------------------------------------------------------- Fusion

template <class T>
Fusion<T>::Fusion(int latent_channels, int residual_channels, Rng& rng)
    : latent_channels_(latent_channels), residual_channels_(residual_channels),
      proj_("fusion.proj", latent_channels + residual_channels, latent_channels, 1,
            nn::Padding::kZero) {
  proj_.init(rng);
}

template <class T>
nn::FeatureMap<T> Fusion<T>::forward(const nn::FeatureMap<T>& z_lmm, const nn::FeatureMap<T>& z_f,
                                     FusionTape<T>* tape) const {
  nn::require_shape(z_lmm, latent_channels_, "fusion (image branch)");
  nn::require_shape(z_f, residual_channels_, "fusion (residual branch)");
  if (z_lmm.height != z_f.height || z_lmm.width != z_f.width) {
    throw ShapeError("fusion inputs differ in spatial size");
  }
  nn::FeatureMap<T> cat(latent_channels_ + residual_channels_, z_lmm.height, z_lmm.width);
  cat.data.topRows(latent_channels_) = z_lmm.data;
  cat.data.bottomRows(residual_channels_) = z_f.data;
  return proj_.forward(cat, tape ? &tape->proj : nullptr);
}

template <class T>
std::pair<nn::FeatureMap<T>, nn::FeatureMap<T>> Fusion<T>::backward(const nn::FeatureMap<T>& grad,
                                                                    const FusionTape<T>& tape) {
  const nn::FeatureMap<T> gcat = proj_.backward(grad, tape.proj);
  return {nn::FeatureMap<T>(gcat.data.topRows(latent_channels_), grad.height, grad.width),
          nn::FeatureMap<T>(gcat.data.bottomRows(residual_channels_), grad.height, grad.width)};
}

// ---------------------------------------------------------------- wiring

template <class T>
MappingNets<T>::MappingNets(const MappingConfig& cfg, const Ablation& ablation)
    : cfg_(cfg), ablation_(ablation) {
  if (ablation.no_srm_flmm && ablation.no_vae_lmm) {
    throw UsageError("no_srm_flmm and no_vae_lmm together leave no input branch");
  }
  Rng rng(Rng::derive(cfg.seed, 0x3a9));
  lmm_ = Lmm<T>(cfg.latent_channels, cfg.lmm, rng);
  flmm_ = Flmm<T>(cfg.flmm, cfg.grid_height, cfg.grid_width, rng);
  fusion_ = Fusion<T>(cfg.latent_channels, cfg.flmm.out_channels, rng);
}

template <class T>
nn::FeatureMap<T> MappingNets<T>::forward(const nn::FeatureMap<T>& z_image,
                                          const nn::FeatureMap<T>& residual,
                                          MappingTape<T>* tape) const {
  nn::FeatureMap<T> z_lmm;
  if (ablation_.no_vae_lmm) {
    z_lmm = nn::FeatureMap<T>(cfg_.latent_channels, z_image.height, z_image.width);
  } else if (ablation_.no_lmm) {
    z_lmm = z_image;
  } else {
    z_lmm = lmm_.forward(z_image, tape ? &tape->lmm : nullptr);
  }
  nn::FeatureMap<T> z_f;
  if (ablation_.no_srm_flmm) {
    z_f = nn::FeatureMap<T>(cfg_.flmm.out_channels, z_image.height, z_image.width);
  } else {
    z_f = flmm_.forward(residual, tape ? &tape->flmm : nullptr);
  }
  return fusion_.forward(z_lmm, z_f, tape ? &tape->fusion : nullptr);
}

template <class T>
void MappingNets<T>::backward(const nn::FeatureMap<T>& grad_zhat, const MappingTape<T>& tape) {
  auto [g_lmm, g_f] = fusion_.backward(grad_zhat, tape.fusion);
  if (!ablation_.no_vae_lmm && !ablation_.no_lmm) lmm_.backward(g_lmm, tape.lmm);
  if (!ablation_.no_srm_flmm) flmm_.backward(g_f, tape.flmm);
}

template <class T>
nn::ParamRefs<T> MappingNets<T>::parameters() {
  nn::ParamRefs<T> out = lmm_.parameters();
  for (auto* p : flmm_.parameters()) out.push_back(p);
  for (auto* p : fusion_.parameters()) out.push_back(p);
  return out;
}

template <class T>
nn::ParamRefs<T> MappingNets<T>::trainable_parameters() {
  nn::ParamRefs<T> out;
  if (!ablation_.no_vae_lmm && !ablation_.no_lmm) out = lmm_.parameters();
  if (!ablation_.no_srm_flmm)
    for (auto* p : flmm_.parameters()) out.push_back(p);
  for (auto* p : fusion_.parameters()) out.push_back(p);
  return out;
}

template <class T>
std::vector<const nn::Parameter<T>*> MappingNets<T>::parameters() const {
  auto refs = const_cast<MappingNets*>(this)->parameters();
  return {refs.begin(), refs.end()};
}

template class Lmm<float>;
template class Lmm<double>;
template class Flmm<float>;
template class Flmm<double>;
template class Fusion<float>;
template class Fusion<double>;
template class MappingNets<float>;
template class MappingNets<double>;

}  // namespace sdifl
