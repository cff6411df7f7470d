#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdifl/png_io.hpp"

namespace sdifl::cli {

namespace {

struct Canvas {
  int width, height;
  std::vector<std::uint8_t> rgb;

  Canvas(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 255) {}

  void set(int x, int y, const Rgb& c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    auto* p = &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  void dot(int x, int y, const Rgb& c) {
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) set(x + dx, y + dy, c);
  }

  // Bresenham, two pixels thick.
  void line(int x0, int y0, int x1, int y1, const Rgb& c) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set(x0, y0, c);
      set(x0, y0 + 1, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }
};

}  // namespace

const std::vector<Rgb>& palette() {
  static const std::vector<Rgb> colors{{31, 119, 180}, {255, 127, 14}, {44, 160, 44},
                                       {214, 39, 40},  {148, 103, 189}, {140, 86, 75}};
  return colors;
}

void line_plot(const std::filesystem::path& path, const std::vector<Series>& series, double ymin,
               double ymax, int width, int height) {
  if (!(ymin < ymax)) {
    ymin = std::numeric_limits<double>::infinity();
    ymax = -ymin;
    for (const auto& s : series)
      for (double v : s.y)
        if (std::isfinite(v)) {
          ymin = std::min(ymin, v);
          ymax = std::max(ymax, v);
        }
    if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
    if (ymax - ymin < 1e-12) ymin -= 0.5, ymax += 0.5;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
  }
  std::size_t n = 1;
  for (const auto& s : series) n = std::max(n, s.y.size());

  Canvas c(width, height);
  const int left = 40, right = width - 20, top = 20, bottom = height - 30;
  const Rgb grid{225, 225, 225}, axis{60, 60, 60};
  for (int k = 0; k <= 4; ++k) {
    const int y = bottom - (bottom - top) * k / 4;
    c.line(left, y, right, y, grid);
  }
  c.line(left, top, left, bottom, axis);
  c.line(left, bottom, right, bottom, axis);

  auto px = [&](std::size_t i) {
    return n == 1 ? (left + right) / 2 : left + static_cast<int>((right - left) * i / (n - 1));
  };
  auto py = [&](double v) {
    return bottom - static_cast<int>(std::lround((v - ymin) / (ymax - ymin) * (bottom - top)));
  };
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      c.dot(px(i), py(s.y[i]), s.color);
      if (i + 1 < s.y.size() && std::isfinite(s.y[i + 1]))
        c.line(px(i), py(s.y[i]), px(i + 1), py(s.y[i + 1]), s.color);
    }
  }
  save_rgb(path, height, width, c.rgb);
}

void save_overlay(const std::filesystem::path& path, const ImageTensor& image,
                  const MaskTensor& truth, const MaskTensor& predicted) {
  const int h = image.height, w = image.width;
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(h) * w * 9);
  auto put = [&](int panel, int y, int x, double r, double g, double b) {
    auto* p = &rgb[(static_cast<std::size_t>(y) * w * 3 + panel * w + x) * 3];
    p[0] = static_cast<std::uint8_t>(std::lround(std::clamp(r, 0.0, 1.0) * 255));
    p[1] = static_cast<std::uint8_t>(std::lround(std::clamp(g, 0.0, 1.0) * 255));
    p[2] = static_cast<std::uint8_t>(std::lround(std::clamp(b, 0.0, 1.0) * 255));
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double r = image.at(y, x, 0), g = image.at(y, x, 1), b = image.at(y, x, 2);
      put(0, y, x, r, g, b);
      if (truth.at(y, x)) put(1, y, x, 0.5 * r + 0.5, 0.5 * g, 0.5 * b);
      else put(1, y, x, r, g, b);
      if (predicted.at(y, x)) put(2, y, x, 0.5 * r, 0.5 * g + 0.5, 0.5 * b);
      else put(2, y, x, r, g, b);
    }
  save_rgb(path, h, w * 3, rgb);
}

void save_residual(const std::filesystem::path& path, const ResidualTensor& residual) {
  double peak = 1e-12;
  for (double v : residual.data) peak = std::max(peak, std::abs(v));
  std::vector<std::uint8_t> rgb(residual.data.size());
  for (std::size_t i = 0; i < rgb.size(); ++i)
    rgb[i] = static_cast<std::uint8_t>(std::lround(std::abs(residual.data[i]) / peak * 255));
  save_rgb(path, residual.height, residual.width, rgb);
}

}  // namespace sdifl::cli
