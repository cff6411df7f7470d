#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sdifl/image.hpp"

namespace sdifl {

// 8-bit grayscale or RGB PNG, scaled by 1/255; grayscale is replicated to
// three channels. Throws FileMissing or DecodeError.
ImageTensor load_image(const std::filesystem::path& path);

// 8-bit grayscale PNG; pixel >= 128 is forged.
MaskTensor load_mask(const std::filesystem::path& path);

// Throws ShapeError when the mask does not match the image's H x W.
void check_pair(const ImageTensor& img, const MaskTensor& mask);

// Values are rounded and clamped to [0,255].
void save_image(const std::filesystem::path& path, const ImageTensor& img);
void save_mask(const std::filesystem::path& path, const MaskTensor& mask);
void save_gray(const std::filesystem::path& path, int height, int width,
               const std::vector<std::uint8_t>& bytes);
void save_rgb(const std::filesystem::path& path, int height, int width,
              const std::vector<std::uint8_t>& bytes);

}  // namespace sdifl
