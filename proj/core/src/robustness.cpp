#include "sdifl/robustness.hpp"

#include <jpeglib.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <limits>
#include <cstdio>
#include <sstream>

#include "sdifl/errors.hpp"
#include "sdifl/rng.hpp"

namespace sdifl {
namespace {

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void on_jpeg_error(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

std::vector<unsigned char> encode_jpeg(const std::vector<unsigned char>& rgb, int height, int width,
                                       int quality) {
  jpeg_compress_struct cinfo;
  JpegErrorManager jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = on_jpeg_error;
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    throw CodecError(std::string("jpeg encode: ") + jerr.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(width);
  cinfo.image_height = static_cast<JDIMENSION>(height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  cinfo.dct_method = JDCT_ISLOW;
  cinfo.optimize_coding = FALSE;
  const int h_samp = quality < 95 ? 2 : 1;
  cinfo.comp_info[0].h_samp_factor = h_samp;
  cinfo.comp_info[0].v_samp_factor = h_samp;
  for (int c = 1; c < 3; ++c) {
    cinfo.comp_info[c].h_samp_factor = 1;
    cinfo.comp_info[c].v_samp_factor = 1;
  }
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<unsigned char*>(&rgb[static_cast<std::size_t>(cinfo.next_scanline) * width * 3]);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::vector<unsigned char> out(buffer, buffer + size);
  std::free(buffer);
  return out;
}

std::vector<unsigned char> decode_jpeg(const std::vector<unsigned char>& bytes, int height, int width) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = on_jpeg_error;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw CodecError(std::string("jpeg decode: ") + jerr.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), bytes.size());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  cinfo.dct_method = JDCT_ISLOW;
  jpeg_start_decompress(&cinfo);
  if (static_cast<int>(cinfo.output_width) != width || static_cast<int>(cinfo.output_height) != height ||
      cinfo.output_components != 3) {
    jpeg_destroy_decompress(&cinfo);
    throw CodecError("jpeg decode: unexpected output geometry");
  }
  std::vector<unsigned char> rgb(static_cast<std::size_t>(height) * width * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = &rgb[static_cast<std::size_t>(cinfo.output_scanline) * width * 3];
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return rgb;
}

std::string format_level(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string_view to_string(OsnProfile profile) {
  switch (profile) {
    case OsnProfile::kLight: return "light";
    case OsnProfile::kMedium: return "medium";
    case OsnProfile::kHeavy: return "heavy";
  }
  return "light";
}

OsnProfile parse_osn_profile(std::string_view text) {
  if (text == "light") return OsnProfile::kLight;
  if (text == "medium") return OsnProfile::kMedium;
  if (text == "heavy") return OsnProfile::kHeavy;
  throw UsageError("unknown OSN profile '" + std::string(text) + "'");
}

std::string Perturbation::tag() const {
  switch (kind) {
    case PerturbationKind::kNone: return "none";
    case PerturbationKind::kGaussianNoise: return "noise" + format_level(level);
    case PerturbationKind::kJpeg: return "jpeg" + std::to_string(quality);
    case PerturbationKind::kResize: return "resize" + format_level(level);
    case PerturbationKind::kOsnChain: return "osn_" + std::string(to_string(profile));
  }
  return "none";
}

ImageTensor add_gaussian_noise(const ImageTensor& img, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw UsageError("noise sigma must be non-negative");
  if (sigma == 0.0) return img;
  Rng rng(seed);
  ImageTensor out = img;
  for (auto& v : out.data) v = std::clamp(v + sigma * rng.normal(), 0.0, 1.0);
  return out;
}

ImageTensor jpeg_roundtrip(const ImageTensor& img, int quality) {
  if (quality < 1 || quality > 100) throw UsageError("jpeg quality must be in [1,100]");
  std::vector<unsigned char> rgb(img.data.size());
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    rgb[i] = static_cast<unsigned char>(std::lround(std::clamp(img.data[i], 0.0, 1.0) * 255.0));
  }
  const auto decoded = decode_jpeg(encode_jpeg(rgb, img.height, img.width, quality), img.height, img.width);
  ImageTensor out(img.height, img.width);
  for (std::size_t i = 0; i < decoded.size(); ++i) out.data[i] = decoded[i] / 255.0;
  return out;
}

std::string jpeg_codec_version() {
#ifdef LIBJPEG_TURBO_VERSION
#define SDIFL_STR2(x) #x
#define SDIFL_STR(x) SDIFL_STR2(x)
  return "libjpeg-turbo " SDIFL_STR(LIBJPEG_TURBO_VERSION) " (JPEG_LIB_VERSION " SDIFL_STR(JPEG_LIB_VERSION) ")";
#else
  return "libjpeg " + std::to_string(JPEG_LIB_VERSION);
#endif
}

int resized_dim(int dim, double factor, int s) {
  return static_cast<int>(std::lround(dim * factor / s)) * s;
}

std::pair<ImageTensor, MaskTensor> resize(const ImageTensor& img, const MaskTensor& mask,
                                          double factor, int s) {
  if (!(factor > 0.0 && factor <= 1.0)) throw UsageError("resize factor must be in (0, 1]");
  const int nh = resized_dim(img.height, factor, s);
  const int nw = resized_dim(img.width, factor, s);
  if (nh < 2 * s || nw < 2 * s) {
    throw TooSmall("resize to " + std::to_string(nh) + "x" + std::to_string(nw) + " is below 2s");
  }
  if (nh == img.height && nw == img.width) return {img, mask};
  ImageTensor out(nh, nw);
  const double sy = static_cast<double>(img.height) / nh;
  const double sx = static_cast<double>(img.width) / nw;
  for (int y = 0; y < nh; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < nw; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        out.at(y, x, c) = (1 - wy) * ((1 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c)) +
                          wy * ((1 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c));
      }
    }
  }
  MaskTensor m(nh, nw);
  for (int y = 0; y < nh; ++y) {
    const int src_y = std::min(static_cast<int>((y + 0.5) * mask.height / nh), mask.height - 1);
    for (int x = 0; x < nw; ++x) {
      const int src_x = std::min(static_cast<int>((x + 0.5) * mask.width / nw), mask.width - 1);
      m.at(y, x) = mask.at(src_y, src_x);
    }
  }
  return {std::move(out), std::move(m)};
}

std::pair<ImageTensor, MaskTensor> osn_chain(const ImageTensor& img, const MaskTensor& mask,
                                             OsnProfile profile, int s) {
  switch (profile) {
    case OsnProfile::kLight:
      return {jpeg_roundtrip(img, 90), mask};
    case OsnProfile::kMedium: {
      auto [i, m] = resize(img, mask, 0.9, s);
      return {jpeg_roundtrip(i, 80), std::move(m)};
    }
    case OsnProfile::kHeavy: {
      auto [i, m] = resize(img, mask, 0.8, s);
      return {jpeg_roundtrip(jpeg_roundtrip(i, 70), 70), std::move(m)};
    }
  }
  throw UsageError("invalid OSN profile");
}

std::pair<ImageTensor, MaskTensor> apply(const Perturbation& p, const ImageTensor& img,
                                         const MaskTensor& mask, int s) {
  switch (p.kind) {
    case PerturbationKind::kNone: return {img, mask};
    case PerturbationKind::kGaussianNoise: return {add_gaussian_noise(img, p.level, p.seed), mask};
    case PerturbationKind::kJpeg: return {jpeg_roundtrip(img, p.quality), mask};
    case PerturbationKind::kResize: return resize(img, mask, p.level, s);
    case PerturbationKind::kOsnChain: return osn_chain(img, mask, p.profile, s);
  }
  throw UsageError("invalid perturbation");
}

double psnr(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw ShapeError("psnr: shapes differ");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

std::vector<Perturbation> parse_grid(std::string_view spec, std::uint64_t seed) {
  std::vector<Perturbation> grid{Perturbation{}};
  for (const std::string& clause : split(spec, ';')) {
    if (clause.empty() || clause == "none") continue;
    const auto eq = clause.find('=');
    if (eq == std::string::npos) throw UsageError("grid clause without '=': " + clause);
    const std::string key = clause.substr(0, eq);
    for (const std::string& value : split(std::string_view(clause).substr(eq + 1), ',')) {
      if (value.empty()) throw UsageError("empty value in grid clause: " + clause);
      Perturbation p;
      try {
        if (key == "noise") {
          p.kind = PerturbationKind::kGaussianNoise;
          p.level = std::stod(value);
          p.seed = seed;
          if (p.level < 0) throw UsageError("negative noise sigma");
        } else if (key == "jpeg") {
          p.kind = PerturbationKind::kJpeg;
          p.quality = std::stoi(value);
          if (p.quality < 1 || p.quality > 100) throw UsageError("jpeg quality out of range");
        } else if (key == "resize") {
          p.kind = PerturbationKind::kResize;
          p.level = std::stod(value);
          if (!(p.level > 0 && p.level <= 1)) throw UsageError("resize factor out of range");
        } else if (key == "osn") {
          p.kind = PerturbationKind::kOsnChain;
          p.profile = parse_osn_profile(value);
        } else {
          throw UsageError("unknown grid key '" + key + "'");
        }
      } catch (const std::logic_error&) {
        throw UsageError("bad grid value '" + value + "' for " + key);
      }
      grid.push_back(p);
    }
  }
  return grid;
}

std::string sample_id(const Sample& sample, std::size_t index) {
  if (!sample.record.image_path.empty()) return sample.record.image_path;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%06zu_%s", index,
                std::string(to_string(sample.record.forgery_kind)).c_str());
  return buf;
}

EvalReport run_suite(const Predictor& predict, const std::vector<Sample>& samples,
                     const std::vector<Perturbation>& grid, int s, std::string config_hash) {
  if (samples.empty()) throw EmptyInput("run_suite: no samples");
  std::vector<MetricRecord> records;
  records.reserve(samples.size() * grid.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string id = sample_id(samples[i], i);
    for (Perturbation p : grid) {
      p.seed = Rng::derive(p.seed, i);
      const auto [img, mask] = apply(p, samples[i].image, samples[i].mask, s);
      const MaskTensor pred = binarize(predict(img));
      records.push_back(make_record(id, p.tag(), mask, pred));
    }
  }
  return make_report(std::move(config_hash), std::move(records));
}

}  // namespace sdifl
