#pragma once

#include <cmath>

#include "sdifl/nn/tensor.hpp"

namespace sdifl::nn {

// Elementwise activations over any Mat. Backward takes the forward input.

template <class T>
Mat<T> silu(const Mat<T>& x) {
  return x.unaryExpr([](T v) { return v / (T(1) + std::exp(-v)); });
}

template <class T>
Mat<T> silu_backward(const Mat<T>& x, const Mat<T>& gy) {
  return x.binaryExpr(gy, [](T v, T g) {
    const T s = T(1) / (T(1) + std::exp(-v));
    return g * s * (T(1) + v * (T(1) - s));
  });
}

template <class T>
Mat<T> sigmoid(const Mat<T>& x) {
  return x.unaryExpr([](T v) { return T(1) / (T(1) + std::exp(-v)); });
}

// Takes the forward *output* y = sigmoid(x).
template <class T>
Mat<T> sigmoid_backward_from_output(const Mat<T>& y, const Mat<T>& gy) {
  return y.binaryExpr(gy, [](T s, T g) { return g * s * (T(1) - s); });
}

// tanh approximation
template <class T>
Mat<T> gelu(const Mat<T>& x) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  return x.unaryExpr([](T v) {
    const T u = T(c) * (v + T(0.044715) * v * v * v);
    return T(0.5) * v * (T(1) + std::tanh(u));
  });
}

template <class T>
Mat<T> gelu_backward(const Mat<T>& x, const Mat<T>& gy) {
  constexpr double c = 0.7978845608028654;
  return x.binaryExpr(gy, [](T v, T g) {
    const T u = T(c) * (v + T(0.044715) * v * v * v);
    const T t = std::tanh(u);
    const T du = T(c) * (T(1) + T(3 * 0.044715) * v * v);
    return g * (T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * du);
  });
}

}  // namespace sdifl::nn
