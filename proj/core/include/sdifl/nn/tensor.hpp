#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "sdifl/errors.hpp"
#include "sdifl/rng.hpp"

namespace sdifl::nn {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// C x (H*W) activation; row c is the contiguous plane of channel c.
template <class T>
struct FeatureMap {
  Mat<T> data;
  int height = 0;
  int width = 0;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w) : data(Mat<T>::Zero(c, h * w)), height(h), width(w) {}
  FeatureMap(Mat<T> d, int h, int w) : data(std::move(d)), height(h), width(w) {}

  int channels() const { return static_cast<int>(data.rows()); }
  T& at(int c, int y, int x) { return data(c, y * width + x); }
  const T& at(int c, int y, int x) const { return data(c, y * width + x); }
  bool same_shape(const FeatureMap& o) const {
    return channels() == o.channels() && height == o.height && width == o.width;
  }
};

template <class T>
struct Parameter {
  std::string name;
  Mat<T> value;
  Mat<T> grad;
  bool decay = true;  // weight decay applies (weights yes, biases/norms no)

  Parameter() = default;
  Parameter(std::string n, int rows, int cols, bool wd)
      : name(std::move(n)), value(Mat<T>::Zero(rows, cols)),
        grad(Mat<T>::Zero(rows, cols)), decay(wd) {}

  void zero_grad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }
};

template <class T>
using ParamRefs = std::vector<Parameter<T>*>;

template <class T>
void fill_normal(Mat<T>& m, Rng& rng, double stddev) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(stddev * rng.normal());
}

// Copies parameter values between precisions (float <-> double) by name order.
template <class To, class From>
void copy_values(const std::vector<Parameter<To>*>& dst, const std::vector<Parameter<From>*>& src) {
  if (dst.size() != src.size()) throw ShapeError("parameter lists differ in length");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i]->value.rows() != src[i]->value.rows() || dst[i]->value.cols() != src[i]->value.cols()) {
      throw ShapeError("parameter shape mismatch for " + dst[i]->name);
    }
    dst[i]->value = src[i]->value.template cast<To>();
  }
}

template <class T>
void require_shape(const FeatureMap<T>& x, int c, const char* where) {
  if (x.channels() != c) {
    throw ShapeError(std::string(where) + ": expected " + std::to_string(c) +
                     " channels, got " + std::to_string(x.channels()));
  }
}

}  // namespace sdifl::nn
