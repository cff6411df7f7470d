#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sdifl/forge.hpp"
#include "sdifl/image.hpp"
#include "sdifl/metrics.hpp"

namespace sdifl {

enum class PerturbationKind { kNone, kGaussianNoise, kJpeg, kResize, kOsnChain };
enum class OsnProfile { kLight, kMedium, kHeavy };

std::string_view to_string(OsnProfile profile);
OsnProfile parse_osn_profile(std::string_view text);

struct Perturbation {
  PerturbationKind kind = PerturbationKind::kNone;
  double level = 0.0;  // sigma for noise, factor for resize
  int quality = 0;     // jpeg
  OsnProfile profile = OsnProfile::kLight;
  std::uint64_t seed = 0;  // noise only

  // Stable label used as the report group key, e.g. "jpeg70", "noise0.3".
  std::string tag() const;
};

// img + N(0, sigma^2) per element, clamped to [0,1]. sigma < 0 throws.
ImageTensor add_gaussian_noise(const ImageTensor& img, double sigma, std::uint64_t seed);

// Baseline JPEG encode/decode through libjpeg(-turbo), integer DCT,
// 4:2:0 below quality 95 and 4:4:4 from 95 up. Throws CodecError.
ImageTensor jpeg_roundtrip(const ImageTensor& img, int quality);

// Version string of the linked JPEG codec, recorded in run manifests.
std::string jpeg_codec_version();

// New size round(dim * factor / s) * s. Image is bilinear (half-pixel
// centres), mask nearest neighbour. Throws TooSmall when a side < 2s.
std::pair<ImageTensor, MaskTensor> resize(const ImageTensor& img, const MaskTensor& mask,
                                          double factor, int s);
int resized_dim(int dim, double factor, int s);

// light: jpeg90; medium: resize0.9 + jpeg80; heavy: resize0.8 + jpeg70 + jpeg70.
std::pair<ImageTensor, MaskTensor> osn_chain(const ImageTensor& img, const MaskTensor& mask,
                                             OsnProfile profile, int s);

// Applies one grid cell to an evaluation input; the mask only ever follows
// geometric changes.
std::pair<ImageTensor, MaskTensor> apply(const Perturbation& p, const ImageTensor& img,
                                         const MaskTensor& mask, int s);

double psnr(const ImageTensor& a, const ImageTensor& b);

// "noise=0.1,0.3,0.5;jpeg=70,80,90;resize=0.7,0.8,0.9;osn=light,medium,heavy".
// The "none" cell is always first. Throws UsageError on malformed specs.
std::vector<Perturbation> parse_grid(std::string_view spec, std::uint64_t seed = 0);

using Predictor = std::function<ProbMap(const ImageTensor&)>;

// Every (image, perturbation) cell: perturb -> predict -> binarize -> score.
EvalReport run_suite(const Predictor& predict, const std::vector<Sample>& samples,
                     const std::vector<Perturbation>& grid, int s, std::string config_hash);

// Report identifier for sample i: its image path, or a zero-padded index.
std::string sample_id(const Sample& sample, std::size_t index);

}  // namespace sdifl
