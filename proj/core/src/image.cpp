#include "sdifl/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sdifl {

bool ImageTensor::valid() const {
  if (channels != 3 || data.size() != pixels() * 3) return false;
  return std::all_of(data.begin(), data.end(), [](double v) {
    return std::isfinite(v) && v >= 0.0 && v <= 1.0;
  });
}

std::size_t MaskTensor::sum() const {
  return std::accumulate(data.begin(), data.end(), std::size_t{0});
}

MaskTensor MaskTensor::complement() const {
  MaskTensor out = *this;
  for (auto& v : out.data) v = v ? 0 : 1;
  return out;
}

std::vector<double> luminance(const ImageTensor& img) {
  std::vector<double> out(img.pixels());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double* p = &img.data[i * 3];
    out[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
  }
  return out;
}

ImageTensor mask_as_image(const MaskTensor& m) {
  ImageTensor out(m.height, m.width);
  for (std::size_t i = 0; i < m.pixels(); ++i) {
    const double v = m.data[i] ? 1.0 : 0.0;
    out.data[i * 3 + 0] = v;
    out.data[i * 3 + 1] = v;
    out.data[i * 3 + 2] = v;
  }
  return out;
}

ProbMap mask_as_prob(const MaskTensor& m) {
  ProbMap out(m.height, m.width);
  for (std::size_t i = 0; i < m.pixels(); ++i) out.data[i] = m.data[i] ? 1.0 : 0.0;
  return out;
}

ProbMap channel_mean(const ImageTensor& img) {
  ProbMap out(img.height, img.width);
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    out.data[i] = (img.data[i * 3] + img.data[i * 3 + 1] + img.data[i * 3 + 2]) / 3.0;
  }
  return out;
}

}  // namespace sdifl
