#pragma once

#include "sdifl/nn/tensor.hpp"

namespace sdifl::nn {

// Token-wise affine map: rows are tokens, Y = X W + b.
template <class T>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in, int out)
      : in_(in), out_(out),
        weight_(name + ".weight", in, out, true),
        bias_(name + ".bias", 1, out, false) {}

  void init(Rng& rng, double gain = 1.0) {
    fill_normal(weight_.value, rng, gain / std::sqrt(static_cast<double>(in_)));
    bias_.value.setZero();
  }

  Mat<T> forward(const Mat<T>& x) const {
    if (x.cols() != in_) throw ShapeError(weight_.name + ": input width mismatch");
    Mat<T> y = x * weight_.value;
    y.rowwise() += bias_.value.row(0);
    return y;
  }

  Mat<T> backward(const Mat<T>& gy, const Mat<T>& x, bool params = true) {
    if (params) {
      weight_.grad.noalias() += x.transpose() * gy;
      bias_.grad.row(0) += gy.colwise().sum();
    }
    return gy * weight_.value.transpose();
  }

  ParamRefs<T> parameters() { return {&weight_, &bias_}; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  int in_ = 0, out_ = 0;
  Parameter<T> weight_, bias_;
};

template <class T>
struct LayerNormCache {
  Mat<T> xhat;
  Vec<T> inv_std;
};

// Per-token normalization over the feature dimension.
template <class T>
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(const std::string& name, int dim)
      : dim_(dim), gamma_(name + ".gamma", 1, dim, false), beta_(name + ".beta", 1, dim, false) {
    gamma_.value.setOnes();
  }

  Mat<T> forward(const Mat<T>& x, LayerNormCache<T>* cache = nullptr) const {
    const Eigen::Index n = x.rows();
    Mat<T> xhat(n, dim_);
    Vec<T> inv_std(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const T mean = x.row(i).mean();
      const auto centered = (x.row(i).array() - mean).matrix();
      const T var = centered.squaredNorm() / T(dim_);
      inv_std(i) = T(1) / std::sqrt(var + T(kEps));
      xhat.row(i) = centered * inv_std(i);
    }
    Mat<T> y = (xhat.array().rowwise() * gamma_.value.row(0).array()).matrix();
    y.rowwise() += beta_.value.row(0);
    if (cache) {
      cache->xhat = std::move(xhat);
      cache->inv_std = std::move(inv_std);
    }
    return y;
  }

  Mat<T> backward(const Mat<T>& gy, const LayerNormCache<T>& cache, bool params = true) {
    if (params) {
      gamma_.grad.row(0) += (gy.array() * cache.xhat.array()).colwise().sum().matrix();
      beta_.grad.row(0) += gy.colwise().sum();
    }
    const Mat<T> gxhat = (gy.array().rowwise() * gamma_.value.row(0).array()).matrix();
    Mat<T> gx(gy.rows(), dim_);
    for (Eigen::Index i = 0; i < gy.rows(); ++i) {
      const T mean_g = gxhat.row(i).mean();
      const T mean_gx = gxhat.row(i).dot(cache.xhat.row(i)) / T(dim_);
      gx.row(i) = cache.inv_std(i) *
                  (gxhat.row(i).array() - mean_g - cache.xhat.row(i).array() * mean_gx).matrix();
    }
    return gx;
  }

  ParamRefs<T> parameters() { return {&gamma_, &beta_}; }

 private:
  static constexpr double kEps = 1e-5;
  int dim_ = 0;
  Parameter<T> gamma_, beta_;
};

}  // namespace sdifl::nn
