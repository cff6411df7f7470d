#include "sdifl/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "sdifl/errors.hpp"

namespace sdifl {
namespace {

struct DecodedPng {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> bytes;
};

DecodedPng decode(const std::filesystem::path& path, bool gray_only) {
  if (!std::filesystem::exists(path)) {
    throw FileMissing("no such file: " + path.string());
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DecodeError(path.string() + ": " + image.message);
  }
  const auto fmt = image.format;
  const bool linear = fmt & PNG_FORMAT_FLAG_LINEAR;
  const bool alpha = fmt & PNG_FORMAT_FLAG_ALPHA;
  const bool color = fmt & PNG_FORMAT_FLAG_COLOR;
  const bool colormap = fmt & PNG_FORMAT_FLAG_COLORMAP;
  if (linear || alpha || colormap || (gray_only && color)) {
    png_image_free(&image);
    throw DecodeError(path.string() + ": expected 8-bit " +
                      (gray_only ? "grayscale" : "grayscale or RGB") + " PNG");
  }
  DecodedPng out;
  out.height = static_cast<int>(image.height);
  out.width = static_cast<int>(image.width);
  out.channels = color ? 3 : 1;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  out.bytes.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.bytes.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError(path.string() + ": " + msg);
  }
  return out;
}

void encode(const std::filesystem::path& path, int height, int width, bool color,
            const std::vector<std::uint8_t>& bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw IoError(path.string() + ": " + image.message);
  }
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

ImageTensor load_image(const std::filesystem::path& path) {
  const DecodedPng png = decode(path, false);
  ImageTensor img(png.height, png.width);
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const std::uint8_t b = png.channels == 3 ? png.bytes[i * 3 + c] : png.bytes[i];
      img.data[i * 3 + c] = b / 255.0;
    }
  }
  return img;
}

MaskTensor load_mask(const std::filesystem::path& path) {
  const DecodedPng png = decode(path, true);
  MaskTensor m(png.height, png.width);
  for (std::size_t i = 0; i < m.pixels(); ++i) m.data[i] = png.bytes[i] >= 128 ? 1 : 0;
  return m;
}

void check_pair(const ImageTensor& img, const MaskTensor& mask) {
  if (img.height != mask.height || img.width != mask.width) {
    throw ShapeError("mask " + std::to_string(mask.height) + "x" +
                     std::to_string(mask.width) + " does not match image " +
                     std::to_string(img.height) + "x" + std::to_string(img.width));
  }
}

void save_image(const std::filesystem::path& path, const ImageTensor& img) {
  std::vector<std::uint8_t> bytes(img.data.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(img.data[i]);
  encode(path, img.height, img.width, true, bytes);
}

void save_mask(const std::filesystem::path& path, const MaskTensor& mask) {
  std::vector<std::uint8_t> bytes(mask.data.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.data[i] ? 255 : 0;
  encode(path, mask.height, mask.width, false, bytes);
}

void save_gray(const std::filesystem::path& path, int height, int width,
               const std::vector<std::uint8_t>& bytes) {
  encode(path, height, width, false, bytes);
}

void save_rgb(const std::filesystem::path& path, int height, int width,
              const std::vector<std::uint8_t>& bytes) {
  encode(path, height, width, true, bytes);
}

}  // namespace sdifl
