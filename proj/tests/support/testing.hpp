#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "sdifl/nn/tensor.hpp"
#include "sdifl/rng.hpp"

namespace sdifl::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = "sdifl_" + tag;
    if (info) name += std::string("_") + info->test_suite_name() + "_" + info->name();
    path_ = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

template <class T>
nn::FeatureMap<T> random_map(Rng& rng, int c, int h, int w, double scale = 1.0) {
  nn::FeatureMap<T> m(c, h, w);
  nn::fill_normal(m.data, rng, scale);
  return m;
}

// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(const nn::Mat<double>& a, const nn::Mat<double>& b) {
  const double denom = std::max(a.norm(), b.norm());
  if (denom == 0.0) return 0.0;
  return (a - b).norm() / denom;
}

// Central-difference gradient of `loss` with respect to every entry of `m`.
inline nn::Mat<double> numeric_grad(nn::Mat<double>& m, const std::function<double()>& loss,
                                    double h = 1e-6) {
  nn::Mat<double> g(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double keep = m.data()[i];
    m.data()[i] = keep + h;
    const double up = loss();
    m.data()[i] = keep - h;
    const double down = loss();
    m.data()[i] = keep;
    g.data()[i] = (up - down) / (2 * h);
  }
  return g;
}

}  // namespace sdifl::testing
