#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sdifl/image.hpp"

namespace sdifl::cli {

using Rgb = std::array<std::uint8_t, 3>;

struct Series {
  std::vector<double> y;  // NaN entries leave a gap
  Rgb color{0, 0, 0};
};

// Line chart on a white canvas with axes and horizontal grid lines. The y
// range is taken from the data unless ymin < ymax is given.
void line_plot(const std::filesystem::path& path, const std::vector<Series>& series,
               double ymin = 0.0, double ymax = 0.0, int width = 640, int height = 400);

// image | image tinted red where the truth is forged | tinted green where predicted.
void save_overlay(const std::filesystem::path& path, const ImageTensor& image,
                  const MaskTensor& truth, const MaskTensor& predicted);

// |residual| per channel, scaled so the largest magnitude maps to 255.
void save_residual(const std::filesystem::path& path, const ResidualTensor& residual);

const std::vector<Rgb>& palette();

}  // namespace sdifl::cli
