#pragma once

#include <cmath>

#include "sdifl/nn/tensor.hpp"

namespace sdifl::nn {

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;  // applied only to Parameter::decay tensors
};

// Decoupled-weight-decay Adam. Owns moment buffers for exactly the tensors it
// was constructed with; nothing else is ever touched.
template <class T>
class AdamW {
 public:
  AdamW(ParamRefs<T> params, AdamWOptions opts = {}) : params_(std::move(params)), opts_(opts) {
    for (auto* p : params_) {
      m_.push_back(Mat<T>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat<T>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  // Applies one update with the given learning rate; gradients are scaled by
  // `grad_scale` first (1/batch for summed per-sample gradients).
  void step(double lr, double grad_scale = 1.0) {
    ++t_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    const T b1 = T(opts_.beta1), b2 = T(opts_.beta2);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Parameter<T>& p = *params_[i];
      const auto g = (p.grad.array() * T(grad_scale));
      m_[i].array() = b1 * m_[i].array() + (T(1) - b1) * g;
      v_[i].array() = b2 * v_[i].array() + (T(1) - b2) * g * g;
      const auto mhat = m_[i].array() / T(bc1);
      const auto vhat = v_[i].array() / T(bc2);
      if (p.decay && opts_.weight_decay > 0.0) {
        p.value.array() -= T(lr * opts_.weight_decay) * p.value.array();
      }
      p.value.array() -= T(lr) * mhat / (vhat.sqrt() + T(opts_.eps));
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  const ParamRefs<T>& params() const { return params_; }
  long steps() const { return t_; }

 private:
  ParamRefs<T> params_;
  AdamWOptions opts_;
  std::vector<Mat<T>> m_, v_;
  long t_ = 0;
};

// Linear warm-up to `base` over `warmup_steps` updates, constant afterwards.
// `update` counts the update being applied, starting at 1.
inline double warmup_lr(double base, long update, long warmup_steps) {
  if (warmup_steps <= 0 || update >= warmup_steps) return base;
  return base * static_cast<double>(update) / static_cast<double>(warmup_steps);
}

}  // namespace sdifl::nn
