#pragma once

#include <cmath>

#include "sdifl/nn/linear.hpp"

namespace sdifl::nn {

template <class T>
struct AttentionCache {
  Mat<T> x;
  Mat<T> qkv;
  std::vector<Mat<T>> probs;  // one N x N softmax matrix per head
  Mat<T> context;
};

// Multi-head self-attention over a token matrix (N x D).
template <class T>
class SelfAttention {
 public:
  SelfAttention() = default;
  SelfAttention(const std::string& name, int dim, int heads)
      : dim_(dim), heads_(heads), head_dim_(dim / heads),
        qkv_(name + ".qkv", dim, 3 * dim), proj_(name + ".proj", dim, dim) {
    if (dim % heads) throw ShapeError(name + ": width not divisible by head count");
  }

  void init(Rng& rng) {
    qkv_.init(rng);
    proj_.init(rng);
  }

  Mat<T> forward(const Mat<T>& x, AttentionCache<T>* cache = nullptr) const {
    const Eigen::Index n = x.rows();
    Mat<T> qkv = qkv_.forward(x);
    Mat<T> context(n, dim_);
    std::vector<Mat<T>> probs;
    const T scale = T(1) / std::sqrt(static_cast<T>(head_dim_));
    for (int h = 0; h < heads_; ++h) {
      const auto q = qkv.middleCols(h * head_dim_, head_dim_);
      const auto k = qkv.middleCols(dim_ + h * head_dim_, head_dim_);
      const auto v = qkv.middleCols(2 * dim_ + h * head_dim_, head_dim_);
      Mat<T> scores = (q * k.transpose()) * scale;
      for (Eigen::Index i = 0; i < n; ++i) {
        const T mx = scores.row(i).maxCoeff();
        scores.row(i) = (scores.row(i).array() - mx).exp().matrix();
        scores.row(i) /= scores.row(i).sum();
      }
      context.middleCols(h * head_dim_, head_dim_).noalias() = scores * v;
      if (cache) probs.push_back(std::move(scores));
    }
    Mat<T> y = proj_.forward(context);
    if (cache) {
      cache->x = x;
      cache->qkv = std::move(qkv);
      cache->probs = std::move(probs);
      cache->context = std::move(context);
    }
    return y;
  }

  Mat<T> backward(const Mat<T>& gy, const AttentionCache<T>& cache, bool params = true) {
    const Mat<T> gcontext = proj_.backward(gy, cache.context, params);
    const Eigen::Index n = gy.rows();
    Mat<T> gqkv(n, 3 * dim_);
    const T scale = T(1) / std::sqrt(static_cast<T>(head_dim_));
    for (int h = 0; h < heads_; ++h) {
      const auto q = cache.qkv.middleCols(h * head_dim_, head_dim_);
      const auto k = cache.qkv.middleCols(dim_ + h * head_dim_, head_dim_);
      const auto v = cache.qkv.middleCols(2 * dim_ + h * head_dim_, head_dim_);
      const Mat<T>& p = cache.probs[static_cast<std::size_t>(h)];
      const auto gc = gcontext.middleCols(h * head_dim_, head_dim_);
      gqkv.middleCols(2 * dim_ + h * head_dim_, head_dim_).noalias() = p.transpose() * gc;
      const Mat<T> gp = gc * v.transpose();
      // softmax backward, row-wise: gs = p * (gp - <gp, p>)
      Mat<T> gs(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const T dot = gp.row(i).dot(p.row(i));
        gs.row(i) = (p.row(i).array() * (gp.row(i).array() - dot)).matrix();
      }
      gs *= scale;
      gqkv.middleCols(h * head_dim_, head_dim_).noalias() = gs * k;
      gqkv.middleCols(dim_ + h * head_dim_, head_dim_).noalias() = gs.transpose() * q;
    }
    return qkv_.backward(gqkv, cache.x, params);
  }

  ParamRefs<T> parameters() {
    ParamRefs<T> out = qkv_.parameters();
    for (auto* p : proj_.parameters()) out.push_back(p);
    return out;
  }

 private:
  int dim_ = 0, heads_ = 1, head_dim_ = 0;
  Linear<T> qkv_, proj_;
};

}  // namespace sdifl::nn
