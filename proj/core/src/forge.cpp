#include "sdifl/forge.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "sdifl/errors.hpp"
#include "sdifl/png_io.hpp"
#include "sdifl/rng.hpp"

namespace sdifl {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kMinRegion = 16;

struct TextureParams {
  std::array<double, 3> base{};
  std::array<double, 3> gradient{};
  double gradient_angle = 0.0;
  struct Wave {
    double fx, fy, phase, amp;
    std::array<double, 3> tint;
  };
  std::vector<Wave> waves;
  int checker_period = 0;  // 0 = no checker
  double checker_amp = 0.0;
  int checker_dx = 0, checker_dy = 0;
  double grain = 0.0;
};

TextureParams draw_params(Rng& rng) {
  TextureParams p;
  for (auto& b : p.base) b = rng.uniform(0.25, 0.75);
  for (auto& g : p.gradient) g = rng.uniform(-0.35, 0.35);
  p.gradient_angle = rng.uniform(0.0, kTwoPi);
  const int n_waves = rng.integer(3, 6);
  for (int i = 0; i < n_waves; ++i) {
    TextureParams::Wave w{};
    w.fx = rng.uniform(-6.0, 6.0);
    w.fy = rng.uniform(-6.0, 6.0);
    w.phase = rng.uniform(0.0, kTwoPi);
    w.amp = rng.uniform(0.02, 0.07);
    for (auto& t : w.tint) t = rng.uniform(0.5, 1.0);
    p.waves.push_back(w);
  }
  if (rng.bernoulli(0.6)) {
    p.checker_period = rng.integer(3, 8) * 2;
    p.checker_amp = rng.uniform(0.02, 0.06);
    p.checker_dx = rng.integer(0, p.checker_period - 1);
    p.checker_dy = rng.integer(0, p.checker_period - 1);
  }
  p.grain = rng.uniform(0.006, 0.02);
  return p;
}

double quantize(double v) {
  return static_cast<double>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)) / 255.0;
}

ImageTensor render(const TextureParams& p, Rng& grain_rng, int height, int width) {
  ImageTensor img(height, width);
  const double ca = std::cos(p.gradient_angle);
  const double sa = std::sin(p.gradient_angle);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = static_cast<double>(x) / width - 0.5;
      const double v = static_cast<double>(y) / height - 0.5;
      const double ramp = ca * u + sa * v;
      double checker = 0.0;
      if (p.checker_period > 0) {
        const int half = p.checker_period / 2;
        const int cx = ((x + p.checker_dx) / half) & 1;
        const int cy = ((y + p.checker_dy) / half) & 1;
        checker = (cx ^ cy) ? p.checker_amp : -p.checker_amp;
      }
      for (int c = 0; c < 3; ++c) {
        double val = p.base[c] + p.gradient[c] * ramp + checker;
        for (const auto& w : p.waves) {
          val += w.amp * w.tint[c] * std::sin(kTwoPi * (w.fx * u + w.fy * v) + w.phase);
        }
        val += p.grain * grain_rng.normal();
        img.at(y, x, c) = val;
      }
    }
  }
  for (auto& v : img.data) v = quantize(v);
  return img;
}

struct Region {
  bool ellipse = false;
  int y0 = 0, x0 = 0, h = 0, w = 0;

  bool contains(int y, int x) const {
    if (y < y0 || y >= y0 + h || x < x0 || x >= x0 + w) return false;
    if (!ellipse) return true;
    const double cy = y0 + (h - 1) / 2.0;
    const double cx = x0 + (w - 1) / 2.0;
    const double ry = h / 2.0, rx = w / 2.0;
    const double dy = (y - cy) / ry, dx = (x - cx) / rx;
    return dy * dy + dx * dx <= 1.0;
  }
};

MaskTensor rasterize(const Region& r, int height, int width) {
  MaskTensor m(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) m.at(y, x) = r.contains(y, x) ? 1 : 0;
  return m;
}

// Rejection-samples until the area constraints hold; degenerate draws never
// leave this function.
Region draw_region(Rng& rng, int height, int width) {
  while (true) {
    Region r;
    r.ellipse = rng.bernoulli(0.5);
    r.h = static_cast<int>(std::lround(rng.uniform(0.2, 0.5) * height));
    r.w = static_cast<int>(std::lround(rng.uniform(0.2, 0.5) * width));
    r.y0 = rng.integer(0, height - r.h);
    r.x0 = rng.integer(0, width - r.w);
    const std::size_t area = rasterize(r, height, width).sum();
    if (area >= kMinRegion && area * 2 <= static_cast<std::size_t>(height) * width) {
      return r;
    }
  }
}

// Harmonic fill from the region boundary: Jacobi relaxation initialized with
// the local mean of the surrounding ring.
void inpaint(ImageTensor& img, const MaskTensor& mask) {
  const int h = img.height, w = img.width;
  for (int c = 0; c < 3; ++c) {
    double ring_sum = 0.0;
    int ring_n = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (mask.at(y, x)) continue;
        bool near = false;
        for (int dy = -1; dy <= 1 && !near; ++dy)
          for (int dx = -1; dx <= 1 && !near; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy >= 0 && yy < h && xx >= 0 && xx < w && mask.at(yy, xx)) near = true;
          }
        if (near) {
          ring_sum += img.at(y, x, c);
          ++ring_n;
        }
      }
    }
    const double fill = ring_n ? ring_sum / ring_n : 0.5;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (mask.at(y, x)) img.at(y, x, c) = fill;
    std::vector<double> next(img.pixels());
    for (int iter = 0; iter < 300; ++iter) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (!mask.at(y, x)) continue;
          double s = 0.0;
          int n = 0;
          const int ys[4] = {y - 1, y + 1, y, y};
          const int xs[4] = {x, x, x - 1, x + 1};
          for (int k = 0; k < 4; ++k) {
            if (ys[k] < 0 || ys[k] >= h || xs[k] < 0 || xs[k] >= w) continue;
            s += img.at(ys[k], xs[k], c);
            ++n;
          }
          next[static_cast<std::size_t>(y) * w + x] = s / n;
        }
      }
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if (mask.at(y, x)) img.at(y, x, c) = next[static_cast<std::size_t>(y) * w + x];
    }
  }
  for (auto& v : img.data) v = quantize(v);
}

}  // namespace

std::string_view to_string(ForgeryKind kind) {
  switch (kind) {
    case ForgeryKind::kCopyMove: return "copy-move";
    case ForgeryKind::kSplice: return "splice";
    case ForgeryKind::kInpaint: return "inpaint";
    case ForgeryKind::kPristine: return "pristine";
  }
  throw InvalidKind("invalid forgery kind");
}

ForgeryKind parse_kind(std::string_view text) {
  if (text == "copy-move") return ForgeryKind::kCopyMove;
  if (text == "splice") return ForgeryKind::kSplice;
  if (text == "inpaint") return ForgeryKind::kInpaint;
  if (text == "pristine") return ForgeryKind::kPristine;
  throw InvalidKind("unknown forgery kind '" + std::string(text) + "'");
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  throw SchemaError("invalid split");
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw SchemaError("unknown split '" + std::string(text) + "'");
}

ImageTensor procedural_texture(std::uint64_t seed, int height, int width) {
  Rng rng(Rng::derive(seed, 1));
  const TextureParams params = draw_params(rng);
  Rng grain(Rng::derive(seed, 2));
  return render(params, grain, height, width);
}

Sample synthesize_forgery(std::uint64_t seed, ForgeryKind kind, int height, int width) {
  if (height < 32 || width < 32) {
    throw ShapeError("synthetic images must be at least 32x32");
  }
  // Validates the enum value.
  const std::string_view kind_name = to_string(kind);
  (void)kind_name;

  Sample s;
  s.record.forgery_kind = kind;
  s.record.seed = seed;
  s.image = procedural_texture(seed, height, width);
  s.mask = MaskTensor(height, width);
  if (kind == ForgeryKind::kPristine) return s;

  Rng rng(Rng::derive(seed, 3));
  const Region dst = draw_region(rng, height, width);
  s.mask = rasterize(dst, height, width);

  switch (kind) {
    case ForgeryKind::kCopyMove: {
      // Source must lie inside the frame and be displaced by at least half
      // the region size along one axis.
      Region src = dst;
      while (true) {
        src.y0 = rng.integer(0, height - dst.h);
        src.x0 = rng.integer(0, width - dst.w);
        if (std::abs(src.y0 - dst.y0) * 2 >= dst.h || std::abs(src.x0 - dst.x0) * 2 >= dst.w) break;
      }
      const ImageTensor original = s.image;
      for (int y = 0; y < dst.h; ++y)
        for (int x = 0; x < dst.w; ++x) {
          if (!s.mask.at(dst.y0 + y, dst.x0 + x)) continue;
          for (int c = 0; c < 3; ++c)
            s.image.at(dst.y0 + y, dst.x0 + x, c) = original.at(src.y0 + y, src.x0 + x, c);
        }
      break;
    }
    case ForgeryKind::kSplice: {
      Rng donor_rng(Rng::derive(seed, 4));
      TextureParams donor = draw_params(donor_rng);
      // Donor comes from a different "camera": grain differs by 2-4x.
      const TextureParams host = [&] {
        Rng host_rng(Rng::derive(seed, 1));
        return draw_params(host_rng);
      }();
      const double factor = donor_rng.uniform(2.0, 4.0);
      donor.grain = donor_rng.bernoulli(0.5) ? host.grain * factor : host.grain / factor;
      Rng grain(Rng::derive(seed, 5));
      const ImageTensor donor_img = render(donor, grain, height, width);
      for (std::size_t i = 0; i < s.mask.pixels(); ++i) {
        if (!s.mask.data[i]) continue;
        for (int c = 0; c < 3; ++c) s.image.data[i * 3 + c] = donor_img.data[i * 3 + c];
      }
      break;
    }
    case ForgeryKind::kInpaint:
      inpaint(s.image, s.mask);
      break;
    case ForgeryKind::kPristine:
      break;
  }
  return s;
}

std::vector<Sample> synthesize_set(std::uint64_t base_seed, int count,
                                   const std::vector<ForgeryKind>& kinds,
                                   int height, int width) {
  if (kinds.empty()) throw InvalidKind("no forgery kinds requested");
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out.push_back(synthesize_forgery(base_seed + static_cast<std::uint64_t>(i),
                                     kinds[static_cast<std::size_t>(i) % kinds.size()],
                                     height, width));
  }
  return out;
}

DatasetManifest write_samples(const std::filesystem::path& dir,
                              const std::vector<Sample>& samples, Split split) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "masks");
  DatasetManifest manifest;
  manifest.split = split;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char stem[64];
    std::snprintf(stem, sizeof(stem), "%06zu_%s", i,
                  std::string(to_string(samples[i].record.forgery_kind)).c_str());
    ForgeryRecord rec = samples[i].record;
    rec.image_path = std::string("images/") + stem + ".png";
    rec.mask_path = std::string("masks/") + stem + ".png";
    save_image(dir / rec.image_path, samples[i].image);
    save_mask(dir / rec.mask_path, samples[i].mask);
    manifest.records.push_back(std::move(rec));
  }
  return manifest;
}

std::vector<Sample> load_samples(const DatasetManifest& manifest,
                                 const std::filesystem::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  std::vector<Sample> out;
  out.reserve(manifest.records.size());
  for (const auto& rec : manifest.records) {
    Sample s;
    s.image = load_image(resolve(rec.image_path));
    s.mask = load_mask(resolve(rec.mask_path));
    check_pair(s.image, s.mask);
    s.record = rec;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace sdifl
