#include "sdifl/errors.hpp"
#include "sdifl/forge.hpp"
#include "sdifl/srm.hpp"
#include "testing.hpp"

using namespace sdifl;

namespace {

using Taps = std::array<std::array<int, 5>, 5>;

const Taps kSecondOrder = {{{0, 0, 0, 0, 0},
                            {0, -1, 2, -1, 0},
                            {0, 2, -4, 2, 0},
                            {0, -1, 2, -1, 0},
                            {0, 0, 0, 0, 0}}};
const Taps kKv = {{{-1, 2, -2, 2, -1},
                   {2, -6, 8, -6, 2},
                   {-2, 8, -12, 8, -2},
                   {2, -6, 8, -6, 2},
                   {-1, 2, -2, 2, -1}}};
const Taps kHorizontal = {{{0, 0, 0, 0, 0},
                           {0, 0, 0, 0, 0},
                           {0, 1, -2, 1, 0},
                           {0, 0, 0, 0, 0},
                           {0, 0, 0, 0, 0}}};

// Explicitly padded plane (numpy "reflect" mode), then a plain 5x5 sweep.
std::vector<double> reference_response(const std::vector<double>& plane, int h, int w,
                                       const Taps& taps, double scale) {
  const int ph = h + 4, pw = w + 4;
  std::vector<double> padded(static_cast<std::size_t>(ph) * pw);
  auto mirror = [](int i, int n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
  };
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x)
      padded[y * pw + x] = plane[mirror(y - 2, h) * w + mirror(x - 2, w)];
  std::vector<double> out(plane.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c) acc += scale * taps[r][c] * padded[(y + r) * pw + x + c];
      out[y * w + x] = acc;
    }
  return out;
}

ImageTensor random_image(std::uint64_t seed, int h, int w) {
  Rng rng(seed);
  ImageTensor img(h, w);
  for (auto& v : img.data) v = rng.uniform();
  return img;
}

}  // namespace

TEST(SrmKernels, MatchPrintedTaps) {
  const auto& k = srm_kernels();
  EXPECT_EQ(k[0].taps, kSecondOrder);
  EXPECT_EQ(k[1].taps, kKv);
  EXPECT_EQ(k[2].taps, kHorizontal);
  EXPECT_EQ(k[0].denominator, 4);
  EXPECT_EQ(k[1].denominator, 12);
  EXPECT_EQ(k[2].denominator, 2);
  EXPECT_EQ(k[0].taps[2][2], -4);
  EXPECT_EQ(k[1].taps[2][2], -12);
}

TEST(SrmKernels, ZeroSum) {
  for (const auto& k : srm_kernels()) EXPECT_EQ(k.tap_sum(), 0);
}

TEST(SrmKernels, EightFoldSymmetry) {
  for (int idx : {0, 1}) {
    const auto& t = srm_kernels()[idx].taps;
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 5; ++c) {
        EXPECT_EQ(t[r][c], t[c][r]);
        EXPECT_EQ(t[r][c], t[4 - r][c]);
        EXPECT_EQ(t[r][c], t[r][4 - c]);
      }
  }
}

TEST(ReflectIndex, Reflect101) {
  EXPECT_EQ(reflect_index(-1, 5), 1);
  EXPECT_EQ(reflect_index(-2, 5), 2);
  EXPECT_EQ(reflect_index(5, 5), 3);
  EXPECT_EQ(reflect_index(6, 5), 2);
  EXPECT_EQ(reflect_index(3, 5), 3);
  EXPECT_EQ(reflect_index(-2, 3), 2);
  EXPECT_EQ(reflect_index(4, 3), 0);
}

TEST(ExtractResiduals, ConstantImageIsZero) {
  for (double v : {0.0, 0.3, 0.77, 1.0}) {
    const auto r = extract_residuals(ImageTensor(9, 13, v));
    for (double x : r.data) EXPECT_LE(std::abs(x), 1e-12);
  }
}

TEST(ExtractResiduals, ShapePreserved) {
  const auto r = extract_residuals(ImageTensor(64, 64, 0.5));
  EXPECT_EQ(r.height, 64);
  EXPECT_EQ(r.width, 64);
  EXPECT_EQ(r.channels, 3);
}

TEST(ExtractResiduals, VerticalStepOnHorizontalKernel) {
  ImageTensor img(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 4; x < 8; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = 1.0;
  const auto r = extract_residuals(img);
  for (int y = 0; y < 8; ++y) {
    EXPECT_NEAR(r.at(y, 3, 2), 0.5, 1e-12);
    EXPECT_NEAR(r.at(y, 4, 2), -0.5, 1e-12);
    EXPECT_NEAR(r.at(y, 1, 2), 0.0, 1e-12);
    EXPECT_NEAR(r.at(y, 6, 2), 0.0, 1e-12);
  }
}

TEST(ExtractResiduals, MatchesPaddedReference) {
  const auto img = random_image(5, 11, 14);
  const auto lum = luminance(img);
  const auto r = extract_residuals(img);
  const Taps* taps[3] = {&kSecondOrder, &kKv, &kHorizontal};
  const double scale[3] = {1.0 / 4, 1.0 / 12, 1.0 / 2};
  for (int k = 0; k < 3; ++k) {
    const auto ref = reference_response(lum, 11, 14, *taps[k], scale[k]);
    for (int y = 0; y < 11; ++y)
      for (int x = 0; x < 14; ++x) EXPECT_NEAR(r.at(y, x, k), ref[y * 14 + x], 1e-12);
  }
}

TEST(ExtractResiduals, LuminanceWeights) {
  ImageTensor img(5, 5);
  img.at(2, 2, 0) = 1.0;
  const auto r = extract_residuals(img);
  EXPECT_NEAR(r.at(2, 2, 0), -4.0 * 0.299 / 4.0, 1e-12);
  EXPECT_NEAR(r.at(2, 2, 1), -12.0 * 0.299 / 12.0, 1e-12);
}

TEST(ExtractResiduals, Linearity) {
  const auto img = random_image(9, 16, 16);
  ImageTensor scaled = img;
  for (auto& v : scaled.data) v *= 0.37;
  const auto a = extract_residuals(img);
  const auto b = extract_residuals(scaled);
  for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_NEAR(b.data[i], 0.37 * a.data[i], 1e-12);
}

TEST(ExtractResiduals, TranslationEquivarianceInInterior) {
  const auto img = random_image(4, 20, 20);
  ImageTensor shifted(20, 20);
  const int dy = 2, dx = 3;
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x)
      for (int c = 0; c < 3; ++c)
        shifted.at(y, x, c) = img.at(std::clamp(y - dy, 0, 19), std::clamp(x - dx, 0, 19), c);
  const auto a = extract_residuals(img);
  const auto b = extract_residuals(shifted);
  for (int y = 2 + dy; y < 18; ++y)
    for (int x = 2 + dx; x < 18; ++x)
      for (int k = 0; k < 3; ++k) EXPECT_NEAR(b.at(y, x, k), a.at(y - dy, x - dx, k), 1e-12);
}

TEST(ExtractResiduals, SymmetricInputSymmetricResponse) {
  ImageTensor img(9, 9);
  Rng rng(2);
  for (int y = 0; y <= 4; ++y)
    for (int x = 0; x <= y; ++x) {
      const double v = rng.uniform();
      for (int yy : {y, 8 - y})
        for (int xx : {x, 8 - x})
          for (int c = 0; c < 3; ++c) {
            img.at(yy, xx, c) = v;
            img.at(xx, yy, c) = v;
          }
    }
  const auto r = extract_residuals(img);
  for (int k : {0, 1})
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 9; ++x) {
        EXPECT_NEAR(r.at(y, x, k), r.at(x, y, k), 1e-12);
        EXPECT_NEAR(r.at(y, x, k), r.at(8 - y, x, k), 1e-12);
        EXPECT_NEAR(r.at(y, x, k), r.at(y, 8 - x, k), 1e-12);
      }
}

TEST(ExtractResiduals, TooSmall) {
  EXPECT_THROW(extract_residuals(ImageTensor(2, 8)), ShapeError);
}
