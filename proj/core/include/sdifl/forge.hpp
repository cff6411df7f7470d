#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdifl/image.hpp"

namespace sdifl {

enum class ForgeryKind { kCopyMove, kSplice, kInpaint, kPristine };

std::string_view to_string(ForgeryKind kind);
// Accepts "copy-move", "splice", "inpaint", "pristine"; throws InvalidKind.
ForgeryKind parse_kind(std::string_view text);

enum class Split { kTrain, kVal, kTest };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct ForgeryRecord {
  std::string image_path;
  std::string mask_path;
  ForgeryKind forgery_kind = ForgeryKind::kPristine;
  std::uint64_t seed = 0;

  bool operator==(const ForgeryRecord&) const = default;
};

struct DatasetManifest {
  std::vector<ForgeryRecord> records;
  Split split = Split::kTrain;

  bool operator==(const DatasetManifest&) const = default;
};

struct Sample {
  ImageTensor image;
  MaskTensor mask;
  ForgeryRecord record;
};

// Deterministic procedural forgery. Background is a seeded texture (colour
// gradient, band-limited sinusoids, checker pattern, pixel grain). Values are
// quantized to k/255 so the PNG round trip is exact. Throws InvalidKind for
// out-of-range kinds and ShapeError when height or width < 32.
Sample synthesize_forgery(std::uint64_t seed, ForgeryKind kind, int height, int width);

// Background texture alone; exposed for codec pretraining and tests.
ImageTensor procedural_texture(std::uint64_t seed, int height, int width);

// `count` samples cycling through `kinds`; sample i uses seed base_seed + i.
std::vector<Sample> synthesize_set(std::uint64_t base_seed, int count,
                                   const std::vector<ForgeryKind>& kinds,
                                   int height, int width);

// Writes image/mask PNGs under `dir` and returns the manifest pointing at them
// (paths relative to `dir`).
DatasetManifest write_samples(const std::filesystem::path& dir,
                              const std::vector<Sample>& samples, Split split);

// Loads every record; relative paths resolve against `base_dir`.
std::vector<Sample> load_samples(const DatasetManifest& manifest,
                                 const std::filesystem::path& base_dir);

// Line-delimited JSON: header {"version":1,"split":...} then one record per
// line. Throws SchemaError on duplicates, missing keys, or unknown kinds.
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace sdifl
