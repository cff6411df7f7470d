#pragma once

#include "sdifl/nn/tensor.hpp"
#include "sdifl/srm.hpp"

namespace sdifl::nn {

enum class Padding { kZero, kReflect };

struct ConvGeometry {
  int kernel = 3;
  int stride = 1;
  int pad = 1;
  Padding mode = Padding::kZero;

  int out_size(int in) const { return (in + 2 * pad - kernel) / stride + 1; }
};

// Unfolds x into a (C*k*k) x (Hout*Wout) patch matrix.
template <class T>
Mat<T> im2col(const FeatureMap<T>& x, const ConvGeometry& g, int out_h, int out_w) {
  const int k = g.kernel;
  Mat<T> cols(static_cast<Eigen::Index>(x.channels()) * k * k,
              static_cast<Eigen::Index>(out_h) * out_w);
  for (int c = 0; c < x.channels(); ++c) {
    const T* plane = x.data.row(c).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* dst = cols.row((c * k + ky) * k + kx).data();
        for (int oy = 0; oy < out_h; ++oy) {
          int iy = oy * g.stride + ky - g.pad;
          const bool y_in = iy >= 0 && iy < x.height;
          if (!y_in && g.mode == Padding::kReflect) iy = reflect_index(iy, x.height);
          for (int ox = 0; ox < out_w; ++ox) {
            int ix = ox * g.stride + kx - g.pad;
            const bool x_in = ix >= 0 && ix < x.width;
            if (g.mode == Padding::kZero) {
              *dst++ = (y_in && x_in) ? plane[iy * x.width + ix] : T(0);
            } else {
              if (!x_in) ix = reflect_index(ix, x.width);
              *dst++ = plane[iy * x.width + ix];
            }
          }
        }
      }
    }
  }
  return cols;
}

// Adjoint of im2col: scatters patch columns back onto a C x H x W map.
template <class T>
FeatureMap<T> col2im(const Mat<T>& cols, int channels, int height, int width,
                     const ConvGeometry& g, int out_h, int out_w) {
  const int k = g.kernel;
  FeatureMap<T> x(channels, height, width);
  for (int c = 0; c < channels; ++c) {
    T* plane = x.data.row(c).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* src = cols.row((c * k + ky) * k + kx).data();
        for (int oy = 0; oy < out_h; ++oy) {
          int iy = oy * g.stride + ky - g.pad;
          const bool y_in = iy >= 0 && iy < height;
          if (!y_in) {
            if (g.mode == Padding::kZero) {
              src += out_w;
              continue;
            }
            iy = reflect_index(iy, height);
          }
          for (int ox = 0; ox < out_w; ++ox, ++src) {
            int ix = ox * g.stride + kx - g.pad;
            if (ix < 0 || ix >= width) {
              if (g.mode == Padding::kZero) continue;
              ix = reflect_index(ix, width);
            }
            plane[iy * width + ix] += *src;
          }
        }
      }
    }
  }
  return x;
}

template <class T>
struct ConvCache {
  Mat<T> cols;
  int in_h = 0, in_w = 0;
};

// Stride-1 "same" convolution (correlation orientation).
template <class T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, int in_ch, int out_ch, int kernel, Padding mode)
      : in_ch_(in_ch), out_ch_(out_ch),
        geom_{kernel, 1, kernel / 2, mode},
        weight_(name + ".weight", out_ch, in_ch * kernel * kernel, true),
        bias_(name + ".bias", out_ch, 1, false) {}

  void init(Rng& rng, double gain = 1.0) {
    const double fan_in = static_cast<double>(in_ch_) * geom_.kernel * geom_.kernel;
    fill_normal(weight_.value, rng, gain / std::sqrt(fan_in));
    bias_.value.setZero();
  }
  void zero_init() {
    weight_.value.setZero();
    bias_.value.setZero();
  }

  FeatureMap<T> forward(const FeatureMap<T>& x, ConvCache<T>* cache = nullptr) const {
    require_shape(x, in_ch_, weight_.name.c_str());
    const int oh = x.height, ow = x.width;
    Mat<T> cols = geom_.kernel == 1 ? x.data : im2col(x, geom_, oh, ow);
    FeatureMap<T> y(Mat<T>(weight_.value * cols), oh, ow);
    y.data.colwise() += bias_.value.col(0);
    if (cache) {
      cache->cols = std::move(cols);
      cache->in_h = x.height;
      cache->in_w = x.width;
    }
    return y;
  }

  // Accumulates parameter gradients; returns dL/dx when `input` is set
  // (otherwise an empty map).
  FeatureMap<T> backward(const FeatureMap<T>& gy, const ConvCache<T>& cache, bool input = true) {
    weight_.grad.noalias() += gy.data * cache.cols.transpose();
    bias_.grad.col(0) += gy.data.rowwise().sum();
    if (!input) return {};
    return input_grad(gy, cache);
  }

  // dL/dx only; parameters untouched.
  FeatureMap<T> input_grad(const FeatureMap<T>& gy, const ConvCache<T>& cache) const {
    Mat<T> gcols = weight_.value.transpose() * gy.data;
    if (geom_.kernel == 1) return FeatureMap<T>(std::move(gcols), cache.in_h, cache.in_w);
    return col2im(gcols, in_ch_, cache.in_h, cache.in_w, geom_, gy.height, gy.width);
  }

  ParamRefs<T> parameters() { return {&weight_, &bias_}; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }
  int in_channels() const { return in_ch_; }
  int out_channels() const { return out_ch_; }

 private:
  int in_ch_ = 0, out_ch_ = 0;
  ConvGeometry geom_;
  Parameter<T> weight_, bias_;
};

struct TransposeCache {
  int in_h = 0, in_w = 0;
};

// Kernel 4, stride 2, padding 1 transposed convolution: doubles H and W.
template <class T>
class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(const std::string& name, int in_ch, int out_ch)
      : in_ch_(in_ch), out_ch_(out_ch),
        weight_(name + ".weight", in_ch, out_ch * kGeom.kernel * kGeom.kernel, true),
        bias_(name + ".bias", out_ch, 1, false) {}

  void init(Rng& rng, double gain = 1.0) {
    // Each output pixel receives in_ch * 4 taps.
    fill_normal(weight_.value, rng, gain / std::sqrt(4.0 * in_ch_));
    bias_.value.setZero();
  }

  FeatureMap<T> forward(const FeatureMap<T>& x, FeatureMap<T>* input_cache = nullptr) const {
    require_shape(x, in_ch_, weight_.name.c_str());
    const Mat<T> cols = weight_.value.transpose() * x.data;
    FeatureMap<T> y = col2im(cols, out_ch_, 2 * x.height, 2 * x.width, kGeom, x.height, x.width);
    y.data.colwise() += bias_.value.col(0);
    if (input_cache) *input_cache = x;
    return y;
  }

  FeatureMap<T> backward(const FeatureMap<T>& gy, const FeatureMap<T>& x, bool input = true) {
    const Mat<T> gcols = im2col(gy, kGeom, x.height, x.width);
    weight_.grad.noalias() += x.data * gcols.transpose();
    bias_.grad.col(0) += gy.data.rowwise().sum();
    if (!input) return {};
    return FeatureMap<T>(Mat<T>(weight_.value * gcols), x.height, x.width);
  }

  FeatureMap<T> input_grad(const FeatureMap<T>& gy, const FeatureMap<T>& x) const {
    const Mat<T> gcols = im2col(gy, kGeom, x.height, x.width);
    return FeatureMap<T>(Mat<T>(weight_.value * gcols), x.height, x.width);
  }

  ParamRefs<T> parameters() { return {&weight_, &bias_}; }

 private:
  static constexpr ConvGeometry kGeom{4, 2, 1, Padding::kZero};
  int in_ch_ = 0, out_ch_ = 0;
  Parameter<T> weight_, bias_;
};

// 2x2 mean pooling, stride 2. Annihilates the (pi, pi) frequency exactly.
template <class T>
FeatureMap<T> avg_pool2(const FeatureMap<T>& x) {
  if (x.height % 2 || x.width % 2) throw ShapeError("avg_pool2 needs even spatial dims");
  const int oh = x.height / 2, ow = x.width / 2;
  FeatureMap<T> y(x.channels(), oh, ow);
  for (int c = 0; c < x.channels(); ++c) {
    const T* in = x.data.row(c).data();
    T* out = y.data.row(c).data();
    for (int oy = 0; oy < oh; ++oy) {
      const T* r0 = in + (2 * oy) * x.width;
      const T* r1 = r0 + x.width;
      for (int ox = 0; ox < ow; ++ox) {
        out[oy * ow + ox] =
            T(0.25) * (r0[2 * ox] + r0[2 * ox + 1] + r1[2 * ox] + r1[2 * ox + 1]);
      }
    }
  }
  return y;
}

template <class T>
FeatureMap<T> avg_pool2_backward(const FeatureMap<T>& gy) {
  const int h = gy.height * 2, w = gy.width * 2;
  FeatureMap<T> gx(gy.channels(), h, w);
  for (int c = 0; c < gy.channels(); ++c) {
    const T* g = gy.data.row(c).data();
    T* out = gx.data.row(c).data();
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out[y * w + x] = T(0.25) * g[(y / 2) * gy.width + x / 2];
  }
  return gx;
}

}  // namespace sdifl::nn
