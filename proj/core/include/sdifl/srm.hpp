#pragma once

#include <array>

#include "sdifl/image.hpp"

namespace sdifl {

// 5x5 integer high-pass taps with a 1/denominator normalizer.
struct SrmKernel {
  std::array<std::array<int, 5>, 5> taps{};
  int denominator = 1;

  double weight(int row, int col) const {
    return static_cast<double>(taps[row][col]) / denominator;
  }
  int tap_sum() const;
};

// The three residual kernels: 2-D second order (1/4), 5x5 "KV" (1/12) and
// horizontal second difference (1/2).
const std::array<SrmKernel, 3>& srm_kernels();

// Luminance, then each kernel correlated with reflect-101 padding of 2.
// Output channel k is kernel k's raw response (no truncation). Requires
// H, W >= 3.
ResidualTensor extract_residuals(const ImageTensor& image);

// Response of one kernel on a single-channel plane (same padding rules).
std::vector<double> correlate_reflect(const std::vector<double>& plane, int height,
                                      int width, const SrmKernel& kernel);

// Reflect-101 index: -1 -> 1, n -> n-2.
int reflect_index(int i, int n);

}  // namespace sdifl
