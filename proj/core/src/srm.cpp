#include "sdifl/srm.hpp"

#include "sdifl/errors.hpp"

namespace sdifl {

int SrmKernel::tap_sum() const {
  int s = 0;
  for (const auto& row : taps)
    for (int t : row) s += t;
  return s;
}

const std::array<SrmKernel, 3>& srm_kernels() {
  static const std::array<SrmKernel, 3> kernels = {{
      {{{{0, 0, 0, 0, 0},
         {0, -1, 2, -1, 0},
         {0, 2, -4, 2, 0},
         {0, -1, 2, -1, 0},
         {0, 0, 0, 0, 0}}},
       4},
      {{{{-1, 2, -2, 2, -1},
         {2, -6, 8, -6, 2},
         {-2, 8, -12, 8, -2},
         {2, -6, 8, -6, 2},
         {-1, 2, -2, 2, -1}}},
       12},
      {{{{0, 0, 0, 0, 0},
         {0, 0, 0, 0, 0},
         {0, 1, -2, 1, 0},
         {0, 0, 0, 0, 0},
         {0, 0, 0, 0, 0}}},
       2},
  }};
  return kernels;
}

int reflect_index(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

std::vector<double> correlate_reflect(const std::vector<double>& plane, int height,
                                      int width, const SrmKernel& kernel) {
  std::vector<double> out(plane.size(), 0.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int r = 0; r < 5; ++r) {
        const int yy = reflect_index(y + r - 2, height);
        for (int c = 0; c < 5; ++c) {
          const int t = kernel.taps[r][c];
          if (t == 0) continue;
          acc += t * plane[static_cast<std::size_t>(yy) * width + reflect_index(x + c - 2, width)];
        }
      }
      out[static_cast<std::size_t>(y) * width + x] = acc / kernel.denominator;
    }
  }
  return out;
}

ResidualTensor extract_residuals(const ImageTensor& image) {
  if (image.height < 3 || image.width < 3) {
    throw ShapeError("residual extraction needs at least 3x3 pixels");
  }
  const std::vector<double> luma = luminance(image);
  ResidualTensor out(image.height, image.width);
  const auto& kernels = srm_kernels();
  for (int k = 0; k < 3; ++k) {
    const std::vector<double> resp =
        correlate_reflect(luma, image.height, image.width, kernels[k]);
    for (std::size_t i = 0; i < resp.size(); ++i) out.data[i * 3 + k] = resp[i];
  }
  return out;
}

}  // namespace sdifl
