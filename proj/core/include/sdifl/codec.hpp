#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdifl/image.hpp"
#include "sdifl/nn/conv.hpp"

namespace sdifl {

// Image/latent geometry. w' = w/s, h' = h/s.
struct ShapeSpec {
  int height = 64;
  int width = 64;
  int channels = 3;
  int factor = 4;            // s, a power of two
  int latent_channels = 16;  // c'

  int latent_height() const { return height / factor; }
  int latent_width() const { return width / factor; }
  // Throws ShapeError unless s is a power of two dividing H and W and c' >= 4c.
  void validate() const;
};

struct CodecConfig {
  int factor = 4;
  int latent_channels = 16;
  int decoder_width = 32;
  std::uint64_t seed = 1;

  bool operator==(const CodecConfig&) const = default;
};

// Image (H x W x 3) <-> 3 x H x W feature map.
template <class T>
nn::FeatureMap<T> to_feature_map(const Raster<double>& img);
template <class T>
ImageTensor to_image(const nn::FeatureMap<T>& fm);

template <class T>
struct EncoderTape {
  nn::FeatureMap<T> input;
  std::vector<nn::ConvCache<T>> convs;
  std::vector<nn::FeatureMap<T>> pooled;  // pre-activation, per block
};

template <class T>
struct DecoderTape {
  nn::ConvCache<T> conv_in;
  nn::FeatureMap<T> conv_in_out;
  std::vector<nn::FeatureMap<T>> up_inputs;
  std::vector<nn::FeatureMap<T>> up_outputs;
  nn::ConvCache<T> conv_out;
  nn::FeatureMap<T> output;  // post-sigmoid
};

// Convolutional autoencoder. Encoder: log2(s) blocks of
// [3x3 conv (reflect) -> 2x2 mean pool -> SiLU], widths doubling up to c';
// the final block has no activation and its output is the deterministic
// latent. Decoder: 3x3 conv, log2(s) stride-2 transposed convs, 3x3 conv,
// sigmoid.
template <class T>
class Codec {
 public:
  Codec() = default;
  explicit Codec(const CodecConfig& cfg);

  const CodecConfig& config() const { return cfg_; }
  int factor() const { return cfg_.factor; }
  int latent_channels() const { return cfg_.latent_channels; }

  // Throw ShapeError when H or W is not divisible by s.
  nn::FeatureMap<T> encode(const ImageTensor& image) const;
  nn::FeatureMap<T> encode_mask(const MaskTensor& mask) const;
  nn::FeatureMap<T> encode_map(const nn::FeatureMap<T>& x, EncoderTape<T>* tape = nullptr) const;

  ImageTensor decode(const nn::FeatureMap<T>& latent) const;
  nn::FeatureMap<T> decode_map(const nn::FeatureMap<T>& latent, DecoderTape<T>* tape = nullptr) const;

  // dL/dlatent through the decoder. Parameters are never touched.
  nn::FeatureMap<T> decode_input_grad(const nn::FeatureMap<T>& grad_out,
                                      const DecoderTape<T>& tape) const;

  // Pretraining only: accumulate parameter gradients and return dL/dlatent.
  // Throw if frozen.
  nn::FeatureMap<T> decode_backward(const nn::FeatureMap<T>& grad_out, const DecoderTape<T>& tape);
  void encode_backward(const nn::FeatureMap<T>& grad_latent, const EncoderTape<T>& tape);

  nn::ParamRefs<T> parameters();
  std::vector<const nn::Parameter<T>*> parameters() const;

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  // FNV-1a over names, shapes and float32 values of every parameter.
  std::string content_hash() const;

 private:
  void check_input(const nn::FeatureMap<T>& x) const;
  template <class Self>
  static nn::FeatureMap<T> decoder_backward_impl(Self& self, const nn::FeatureMap<T>& grad_out,
                                                 const DecoderTape<T>& tape);

  CodecConfig cfg_;
  bool frozen_ = false;
  std::vector<nn::Conv2d<T>> enc_;
  nn::Conv2d<T> dec_in_;
  std::vector<nn::ConvTranspose2d<T>> dec_up_;
  nn::Conv2d<T> dec_out_;
};

extern template class Codec<float>;
extern template class Codec<double>;

// Hash over an arbitrary parameter list, float32 view.
template <class T>
std::string parameters_hash(const std::vector<const nn::Parameter<T>*>& params);

}  // namespace sdifl
