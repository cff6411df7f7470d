#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace sdifl {

// Dense H x W x C raster, row-major with interleaved channels.
template <class T>
struct Raster {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<T> data;

  Raster() = default;
  Raster(int h, int w, int c, T fill = T{})
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {}

  std::size_t index(int y, int x, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  T& at(int y, int x, int c = 0) { return data[index(y, x, c)]; }
  const T& at(int y, int x, int c = 0) const { return data[index(y, x, c)]; }
  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  bool same_shape(const Raster& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
  bool operator==(const Raster&) const = default;
};

// Image in [0,1], three channels.
struct ImageTensor : Raster<double> {
  ImageTensor() = default;
  ImageTensor(int h, int w, double fill = 0.0) : Raster(h, w, 3, fill) {}
  bool valid() const;
};

// Binary ground-truth mask: 1 = forged, 0 = authentic.
struct MaskTensor : Raster<std::uint8_t> {
  MaskTensor() = default;
  MaskTensor(int h, int w, std::uint8_t fill = 0) : Raster(h, w, 1, fill) {}
  std::size_t sum() const;
  MaskTensor complement() const;
};

// Single-channel soft prediction in [0,1].
struct ProbMap : Raster<double> {
  ProbMap() = default;
  ProbMap(int h, int w, double fill = 0.0) : Raster(h, w, 1, fill) {}
};

// SRM filter responses; channel k is the response of kernel k. Unbounded.
struct ResidualTensor : Raster<double> {
  ResidualTensor() = default;
  ResidualTensor(int h, int w, double fill = 0.0) : Raster(h, w, 3, fill) {}
};

// 0.299 R + 0.587 G + 0.114 B
std::vector<double> luminance(const ImageTensor& img);

// Mask as a {0,1} three-channel image (what the codec sees).
ImageTensor mask_as_image(const MaskTensor& m);

ProbMap mask_as_prob(const MaskTensor& m);

// Channel mean of an image-space decoder output.
ProbMap channel_mean(const ImageTensor& img);

}  // namespace sdifl
