#include "sdifl/codec.hpp"

#include <bit>
#include <type_traits>

#include "sdifl/hash.hpp"
#include "sdifl/nn/activation.hpp"

namespace sdifl {

void ShapeSpec::validate() const {
  if (factor < 1 || !std::has_single_bit(static_cast<unsigned>(factor))) {
    throw ShapeError("downsampling factor must be a power of two");
  }
  if (height % factor || width % factor) {
    throw ShapeError("image " + std::to_string(height) + "x" + std::to_string(width) +
                     " is not divisible by s=" + std::to_string(factor));
  }
  if (latent_channels < 4 * channels) {
    throw ShapeError("latent channels must be at least 4x the image channels");
  }
}

template <class T>
nn::FeatureMap<T> to_feature_map(const Raster<double>& img) {
  nn::FeatureMap<T> fm(img.channels, img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) fm.at(c, y, x) = static_cast<T>(img.at(y, x, c));
  return fm;
}

template <class T>
ImageTensor to_image(const nn::FeatureMap<T>& fm) {
  ImageTensor img(fm.height, fm.width);
  for (int y = 0; y < fm.height; ++y)
    for (int x = 0; x < fm.width; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<double>(fm.at(c, y, x));
  return img;
}

template nn::FeatureMap<float> to_feature_map<float>(const Raster<double>&);
template nn::FeatureMap<double> to_feature_map<double>(const Raster<double>&);
template ImageTensor to_image<float>(const nn::FeatureMap<float>&);
template ImageTensor to_image<double>(const nn::FeatureMap<double>&);

template <class T>
Codec<T>::Codec(const CodecConfig& cfg) : cfg_(cfg) {
  ShapeSpec{cfg.factor, cfg.factor, 3, cfg.factor, cfg.latent_channels}.validate();
  const int blocks = std::countr_zero(static_cast<unsigned>(cfg.factor));
  Rng rng(Rng::derive(cfg.seed, 0xc0dec));
  int in = 3;
  for (int i = 0; i < blocks; ++i) {
    const int out = std::max(cfg.latent_channels >> (blocks - 1 - i), 4);
    enc_.emplace_back("encoder." + std::to_string(i), in, out, 3, nn::Padding::kReflect);
    enc_.back().init(rng, i + 1 < blocks ? 1.4 : 1.0);
    in = out;
  }
  int width = cfg.decoder_width;
  dec_in_ = nn::Conv2d<T>("decoder.in", cfg.latent_channels, width, 3, nn::Padding::kReflect);
  dec_in_.init(rng, 1.4);
  for (int i = 0; i < blocks; ++i) {
    const int out = std::max(cfg.decoder_width >> i, 8);
    dec_up_.emplace_back("decoder.up." + std::to_string(i), width, out);
    dec_up_.back().init(rng, 1.4);
    width = out;
  }
  dec_out_ = nn::Conv2d<T>("decoder.out", width, 3, 3, nn::Padding::kReflect);
  dec_out_.init(rng);
}

template <class T>
void Codec<T>::check_input(const nn::FeatureMap<T>& x) const {
  if (x.channels() != 3) throw ShapeError("codec input must have 3 channels");
  ShapeSpec{x.height, x.width, 3, cfg_.factor, cfg_.latent_channels}.validate();
}

template <class T>
nn::FeatureMap<T> Codec<T>::encode_map(const nn::FeatureMap<T>& x, EncoderTape<T>* tape) const {
  check_input(x);
  if (tape) {
    tape->input = x;
    tape->convs.assign(enc_.size(), {});
    tape->pooled.assign(enc_.size(), {});
  }
  nn::FeatureMap<T> h = x;
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    nn::FeatureMap<T> pooled = nn::avg_pool2(enc_[i].forward(h, tape ? &tape->convs[i] : nullptr));
    const bool last = i + 1 == enc_.size();
    h = last ? pooled : nn::FeatureMap<T>(nn::silu(pooled.data), pooled.height, pooled.width);
    if (tape) tape->pooled[i] = std::move(pooled);
  }
  return h;
}

template <class T>
nn::FeatureMap<T> Codec<T>::encode(const ImageTensor& image) const {
  return encode_map(to_feature_map<T>(image));
}

template <class T>
nn::FeatureMap<T> Codec<T>::encode_mask(const MaskTensor& mask) const {
  return encode_map(to_feature_map<T>(mask_as_image(mask)));
}

template <class T>
nn::FeatureMap<T> Codec<T>::decode_map(const nn::FeatureMap<T>& latent, DecoderTape<T>* tape) const {
  if (latent.channels() != cfg_.latent_channels) {
    throw ShapeError("latent has " + std::to_string(latent.channels()) + " channels, codec expects " +
                     std::to_string(cfg_.latent_channels));
  }
  nn::FeatureMap<T> h = dec_in_.forward(latent, tape ? &tape->conv_in : nullptr);
  if (tape) {
    tape->conv_in_out = h;
    tape->up_inputs.assign(dec_up_.size(), {});
    tape->up_outputs.assign(dec_up_.size(), {});
  }
  h.data = nn::silu(h.data);
  for (std::size_t i = 0; i < dec_up_.size(); ++i) {
    nn::FeatureMap<T> u = dec_up_[i].forward(h, tape ? &tape->up_inputs[i] : nullptr);
    h = nn::FeatureMap<T>(nn::silu(u.data), u.height, u.width);
    if (tape) tape->up_outputs[i] = std::move(u);
  }
  nn::FeatureMap<T> out = dec_out_.forward(h, tape ? &tape->conv_out : nullptr);
  out.data = nn::sigmoid(out.data);
  if (tape) tape->output = out;
  return out;
}

template <class T>
ImageTensor Codec<T>::decode(const nn::FeatureMap<T>& latent) const {
  return to_image(decode_map(latent));
}

template <class T>
template <class Self>
nn::FeatureMap<T> Codec<T>::decoder_backward_impl(Self& self, const nn::FeatureMap<T>& grad_out,
                                                  const DecoderTape<T>& tape) {
  // Non-const self accumulates parameter gradients; const self only
  // propagates to the input.
  constexpr bool kParams = !std::is_const_v<Self>;
  nn::FeatureMap<T> g(nn::sigmoid_backward_from_output(tape.output.data, grad_out.data),
                      grad_out.height, grad_out.width);
  if constexpr (kParams) {
    g = self.dec_out_.backward(g, tape.conv_out);
  } else {
    g = self.dec_out_.input_grad(g, tape.conv_out);
  }
  for (std::size_t j = self.dec_up_.size(); j-- > 0;) {
    g.data = nn::silu_backward(tape.up_outputs[j].data, g.data);
    if constexpr (kParams) {
      g = self.dec_up_[j].backward(g, tape.up_inputs[j]);
    } else {
      g = self.dec_up_[j].input_grad(g, tape.up_inputs[j]);
    }
  }
  g.data = nn::silu_backward(tape.conv_in_out.data, g.data);
  if constexpr (kParams) {
    return self.dec_in_.backward(g, tape.conv_in);
  } else {
    return self.dec_in_.input_grad(g, tape.conv_in);
  }
}

template <class T>
nn::FeatureMap<T> Codec<T>::decode_input_grad(const nn::FeatureMap<T>& grad_out,
                                              const DecoderTape<T>& tape) const {
  return decoder_backward_impl(*this, grad_out, tape);
}

template <class T>
nn::FeatureMap<T> Codec<T>::decode_backward(const nn::FeatureMap<T>& grad_out,
                                           const DecoderTape<T>& tape) {
  if (frozen_) throw Error("decode_backward on a frozen codec");
  return decoder_backward_impl(*this, grad_out, tape);
}

template <class T>
void Codec<T>::encode_backward(const nn::FeatureMap<T>& grad_latent, const EncoderTape<T>& tape) {
  if (frozen_) throw Error("encode_backward on a frozen codec");
  nn::FeatureMap<T> g = grad_latent;
  for (std::size_t j = enc_.size(); j-- > 0;) {
    if (j + 1 != enc_.size()) g.data = nn::silu_backward(tape.pooled[j].data, g.data);
    g = nn::avg_pool2_backward(g);
    g = enc_[j].backward(g, tape.convs[j], j > 0);
  }
}

template <class T>
nn::ParamRefs<T> Codec<T>::parameters() {
  nn::ParamRefs<T> out;
  auto add = [&](nn::ParamRefs<T> ps) { out.insert(out.end(), ps.begin(), ps.end()); };
  for (auto& c : enc_) add(c.parameters());
  add(dec_in_.parameters());
  for (auto& u : dec_up_) add(u.parameters());
  add(dec_out_.parameters());
  return out;
}

template <class T>
std::vector<const nn::Parameter<T>*> Codec<T>::parameters() const {
  auto refs = const_cast<Codec*>(this)->parameters();
  return {refs.begin(), refs.end()};
}

template <class T>
std::string parameters_hash(const std::vector<const nn::Parameter<T>*>& params) {
  Fnv1a h;
  for (const auto* p : params) {
    h.update(p->name);
    const std::int64_t shape[2] = {p->value.rows(), p->value.cols()};
    h.update(std::as_bytes(std::span(shape)));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const float f = static_cast<float>(p->value.data()[i]);
      h.update(std::as_bytes(std::span(&f, 1)));
    }
  }
  return h.hex();
}

template std::string parameters_hash<float>(const std::vector<const nn::Parameter<float>*>&);
template std::string parameters_hash<double>(const std::vector<const nn::Parameter<double>*>&);

template <class T>
std::string Codec<T>::content_hash() const {
  return parameters_hash(parameters());
}

template class Codec<float>;
template class Codec<double>;

}  // namespace sdifl
