// Acceptance gate: runs every criterion and prints one PASS/FAIL line each.
// Exit status is the number of failed criteria (0 when all pass).

#include <CLI11.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sdifl/codec.hpp"
#include "sdifl/forge.hpp"
#include "sdifl/mapping.hpp"
#include "sdifl/metrics.hpp"
#include "sdifl/objective.hpp"
#include "sdifl/robustness.hpp"
#include "sdifl/srm.hpp"
#include "sdifl/theory.hpp"
#include "sdifl/train.hpp"

namespace fs = std::filesystem;
using namespace sdifl;
using clk = std::chrono::steady_clock;

namespace {

double seconds_since(clk::time_point t) {
  return std::chrono::duration<double>(clk::now() - t).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void progress(const std::string& msg) { std::cerr << "  .. " << msg << std::endl; }

// ---------------------------------------------------------------- shared data

const std::vector<ForgeryKind> kForged{ForgeryKind::kCopyMove, ForgeryKind::kSplice,
                                       ForgeryKind::kInpaint};

constexpr int kSide = 64;
constexpr int kCodecImages = 2000;
constexpr int kTrainImages = 2000;
constexpr int kHeldOut = 300;

std::vector<Sample> forged_set(std::uint64_t base, int n) { return synthesize_set(base, n, kForged, kSide, kSide); }

// ---------------------------------------------------------------- 1 theory

Outcome theory_suite() {
  const auto t0 = clk::now();
  const auto r = theory::run_theory_suite();
  const double secs = seconds_since(t0);
  const bool ok = r.fold_cases.size() == 100 && r.fold_max_err <= 1e-9 && r.jensen_gaps.size() == 1000 &&
                  r.jensen_gap_min >= -1e-12 && r.jensen_posterior_max_gap <= 1e-12 &&
                  r.mi_cases.size() == 100 && r.mi_gain_min >= -1e-12 && r.xor_gain == 1.0 && secs < 60.0;
  return {ok, fmt("fold max err %.2e, Jensen gap min %.2e, gap at posterior %.2e, MI gain min %.2e, "
                  "XOR gain %.17g bit, %.2fs",
                  r.fold_max_err, r.jensen_gap_min, r.jensen_posterior_max_gap, r.mi_gain_min, r.xor_gain,
                  secs)};
}

// ---------------------------------------------------------------- 2 residuals

Outcome residual_suite() {
  using Taps = std::array<std::array<int, 5>, 5>;
  const std::array<Taps, 3> taps{{{{{0, 0, 0, 0, 0},
                                    {0, -1, 2, -1, 0},
                                    {0, 2, -4, 2, 0},
                                    {0, -1, 2, -1, 0},
                                    {0, 0, 0, 0, 0}}},
                                  {{{-1, 2, -2, 2, -1},
                                    {2, -6, 8, -6, 2},
                                    {-2, 8, -12, 8, -2},
                                    {2, -6, 8, -6, 2},
                                    {-1, 2, -2, 2, -1}}},
                                  {{{0, 0, 0, 0, 0},
                                    {0, 0, 0, 0, 0},
                                    {0, 1, -2, 1, 0},
                                    {0, 0, 0, 0, 0},
                                    {0, 0, 0, 0, 0}}}}};
  const std::array<int, 3> denominators{4, 12, 2};
  bool taps_ok = true;
  for (int k = 0; k < 3; ++k)
    taps_ok = taps_ok && srm_kernels()[k].taps == taps[k] && srm_kernels()[k].denominator == denominators[k];

  double constant_max = 0.0;
  Rng rng(17);
  for (int t = 0; t < 20; ++t) {
    const ImageTensor flat(16 + t, 20, rng.uniform());
    for (double v : extract_residuals(flat).data) constant_max = std::max(constant_max, std::abs(v));
  }

  // Horizontal step 0 -> 1 between columns 3 and 4 of an 8x8 image:
  // kernel 3 at column 3 is (0 - 0 + 1)/2, at column 4 is (0 - 2 + 1)/2.
  ImageTensor step(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 4; x < 8; ++x)
      for (int c = 0; c < 3; ++c) step.at(y, x, c) = 1.0;
  const auto res = extract_residuals(step);
  double step_err = 0.0;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const double expected = x == 3 ? 0.5 : x == 4 ? -0.5 : 0.0;
      step_err = std::max(step_err, std::abs(res.at(y, x, 2) - expected));
    }
  const bool ok = taps_ok && constant_max <= 1e-12 && step_err <= 1e-12;
  return {ok, fmt("taps/normalizers exact: %s, constant response max %.2e, step-edge deviation %.2e",
                  taps_ok ? "yes" : "no", constant_max, step_err)};
}

// ---------------------------------------------------------------- 3 objective

double rel_err(const nn::Mat<double>& a, const nn::Mat<double>& b) {
  const double d = std::max(a.norm(), b.norm());
  return d == 0.0 ? 0.0 : (a - b).norm() / d;
}

nn::Mat<double> central_diff(nn::Mat<double>& m, const std::function<double()>& f, double h = 1e-6) {
  nn::Mat<double> g(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double keep = m.data()[i];
    m.data()[i] = keep + h;
    const double up = f();
    m.data()[i] = keep - h;
    const double down = f();
    m.data()[i] = keep;
    g.data()[i] = (up - down) / (2 * h);
  }
  return g;
}

Outcome objective_suite() {
  using Vec = std::vector<double>;
  auto cs = [](const Vec& v) { return std::span<const double>(v.data(), v.size()); };
  Rng rng(23);

  double lo = 1.0, hi = 0.0;
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 1 + t % 64;
    Vec m(n), p(n);
    for (auto& x : m) x = t % 2 ? double(rng.bernoulli(0.4)) : rng.uniform();
    for (auto& x : p) x = t % 5 == 0 ? 0.0 : rng.uniform();
    const double l = dice_loss<double>(cs(m), cs(p));
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  }
  const bool range_ok = lo >= 0.0 && hi <= 1.0 + 2 * kDiceEpsilon;

  const Vec ones(4, 1.0), left{1, 1, 0, 0}, right{0, 0, 1, 1}, one_on{1, 0, 0, 0};
  const double h0 = dice_loss<double>(cs(ones), cs(ones));
  const double h1 = dice_loss<double>(cs(left), cs(right));
  const double h6 = dice_loss<double>(cs(ones), cs(one_on));
  const bool hand_ok = std::abs(h0) <= 1e-9 && std::abs(h1 - 1.0) <= 1e-9 && std::abs(h6 - 0.6) <= 1e-9;

  // Loss gradients against central differences.
  double loss_err = 0.0;
  for (int t = 0; t < 10; ++t) {
    nn::Mat<double> m(1, 64), p(1, 64), za(1, 48), zb(1, 48);
    for (Eigen::Index i = 0; i < 64; ++i) {
      m(i) = t % 2 ? double(rng.bernoulli(0.4)) : rng.uniform();
      p(i) = rng.uniform();
    }
    for (Eigen::Index i = 0; i < 48; ++i) {
      za(i) = rng.normal();
      zb(i) = rng.normal();
    }
    auto span_of = [](const nn::Mat<double>& x) { return std::span<const double>(x.data(), x.size()); };
    nn::Mat<double> g = nn::Mat<double>::Zero(1, 64), gz = nn::Mat<double>::Zero(1, 48);
    dice_grad<double>(span_of(m), span_of(p), std::span<double>(g.data(), g.size()));
    latent_matching_grad<double>(span_of(za), span_of(zb), std::span<double>(gz.data(), gz.size()));
    loss_err = std::max(loss_err, rel_err(g, central_diff(p, [&] { return dice_loss<double>(span_of(m), span_of(p)); })));
    loss_err = std::max(loss_err, rel_err(gz, central_diff(zb, [&] {
                                            return latent_matching_loss<double>(span_of(za), span_of(zb));
                                          })));
  }

  // Full pipeline on an 8x8 instance in double precision.
  Codec<double> codec(CodecConfig{4, 12, 8, 3});
  codec.freeze();
  MappingConfig mc;
  mc.latent_channels = 12;
  mc.grid_height = 2;
  mc.grid_width = 2;
  mc.lmm = {1, 6};
  mc.flmm = {4, 8, 1, 2, 2, 6};
  mc.seed = 29;
  MappingNets<double> nets(mc, Ablation{});
  for (auto* prm : nets.parameters()) nn::fill_normal(prm->value, rng, 0.3);
  ImageTensor img(8, 8);
  for (auto& v : img.data) v = rng.uniform();
  MaskTensor mask(8, 8);
  for (auto& v : mask.data) v = rng.bernoulli(0.4);
  const auto zi = codec.encode(img);
  const auto zm = codec.encode_mask(mask);
  const auto res = to_feature_map<double>(extract_residuals(img));
  const std::vector<double> mflat(mask.data.begin(), mask.data.end());
  const std::span<const double> ms(mflat.data(), mflat.size());
  for (auto* prm : nets.parameters()) prm->zero_grad();
  pipeline_step<double>(codec, nets, zi, zm, res, ms, true);
  double pipe_err = 0.0;
  for (auto* prm : nets.parameters()) {
    const auto fd = central_diff(prm->value, [&] { return pipeline_step<double>(codec, nets, zi, zm, res, ms, false).total; });
    pipe_err = std::max(pipe_err, rel_err(prm->grad, fd));
  }

  const bool ok = range_ok && hand_ok && loss_err <= 1e-4 && pipe_err <= 1e-4;
  return {ok, fmt("Dice range [%.4f, %.4f], hand cases %.1e/%.9f/%.9f, loss FD rel err %.2e, "
                  "pipeline FD rel err %.2e",
                  lo, hi, h0, h1, h6, loss_err, pipe_err)};
}

// ---------------------------------------------------------------- 4 metrics

Outcome metrics_suite() {
  Rng rng(31);
  int mismatches = 0, iou_violations = 0;
  for (int t = 0; t < 1000; ++t) {
    MaskTensor truth(8, 8), pred(8, 8);
    const double pt = t % 10 == 0 ? 0.0 : rng.uniform(), pp = t % 15 == 0 ? 0.0 : rng.uniform();
    for (auto& v : truth.data) v = rng.bernoulli(pt);
    for (auto& v : pred.data) v = rng.bernoulli(pp);
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < 64; ++i) {
      tp += truth.data[i] * pred.data[i];
      fp += (1 - truth.data[i]) * pred.data[i];
      fn += truth.data[i] * (1 - pred.data[i]);
    }
    double precision = 0, recall = 0, iou = 1, f1 = 1;
    if (tp + fp + fn > 0) {
      precision = tp + fp ? double(tp) / double(tp + fp) : 0.0;
      recall = tp + fn ? double(tp) / double(tp + fn) : 0.0;
      iou = double(tp) / double(tp + fp + fn);
      f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    }
    const auto s = scores(confusion(truth, pred));
    if (s.precision != precision || s.recall != recall || s.iou != iou || s.f1 != f1) ++mismatches;
    if (s.iou > s.f1) ++iou_violations;
  }
  int complement_fail = 0;
  for (int t = 0; t < 200; ++t) {
    MaskTensor truth(8, 8);
    for (auto& v : truth.data) v = rng.bernoulli(0.3);
    truth.data[0] = 1;
    truth.data[1] = 0;
    if (complement_f1(truth, truth.complement()) != 1.0) ++complement_fail;
  }
  const bool ok = mismatches == 0 && iou_violations == 0 && complement_fail == 0;
  return {ok, fmt("oracle mismatches %d/1000, iou > f1 %d, complement rule failures %d/200", mismatches,
                  iou_violations, complement_fail)};
}

// ---------------------------------------------------------------- 5-7 learning

struct LearningRun {
  std::optional<Codec<float>> codec;
  std::optional<SdiflModel> model;
  TrainConfig cfg;
  std::vector<Sample> train_set, test_set;
  double mae = 1.0, mask_acc = 0.0, cf1 = 0.0, seconds_codec = 0, seconds_train = 0;
};

LearningRun& learning() {
  static LearningRun run = [] {
    LearningRun r;
    const auto t0 = clk::now();
    std::vector<ImageTensor> images;
    std::vector<MaskTensor> masks;
    for (const auto& s : synthesize_set(100000, kCodecImages, {ForgeryKind::kPristine}, kSide, kSide))
      images.push_back(s.image);
    for (const auto& s : forged_set(200000, kCodecImages)) masks.push_back(s.mask);
    const CodecPretrainConfig pc;
    progress(fmt("pretraining codec (%d epochs, %zu images + %zu masks)", pc.epochs, images.size(), masks.size()));
    auto res = pretrain_codec(images, masks, pc, [&](int e, double l) {
      progress(fmt("codec epoch %d loss %.5f (%.0fs)", e, l, seconds_since(t0)));
    });
    r.codec = res.codec;
    r.seconds_codec = seconds_since(t0);

    std::vector<ImageTensor> held_images;
    std::vector<MaskTensor> held_masks;
    for (const auto& s : synthesize_set(900000, 200, {ForgeryKind::kPristine}, kSide, kSide))
      held_images.push_back(s.image);
    for (const auto& s : forged_set(910000, 200)) held_masks.push_back(s.mask);
    r.mae = reconstruction_mae(*r.codec, held_images);
    r.mask_acc = mask_roundtrip_accuracy(*r.codec, held_masks);

    r.cfg = TrainConfig{};
    r.cfg.learning_rate = 1e-4;
    r.cfg.warmup_epochs = 5;
    r.cfg.batch_size = 4;
    r.cfg.epochs = 30;
    r.train_set = forged_set(300000, kTrainImages);
    r.test_set = forged_set(910000, kHeldOut);
    const auto t1 = clk::now();
    TrainCallbacks cb;
    cb.on_epoch = [&](int e, double l) { progress(fmt("train epoch %d loss %.4f (%.0fs)", e, l, seconds_since(t1))); };
    r.model = train(r.cfg, *r.codec, r.train_set, cb);
    r.seconds_train = seconds_since(t1);
    r.cf1 = evaluate(*r.model, r.test_set).summary.at("none").f1_complement_max;
    return r;
  }();
  return run;
}

Outcome end_to_end() {
  const auto& r = learning();
  const bool ok = r.mae <= 0.08 && r.mask_acc >= 0.98 && r.cf1 >= 0.70;
  return {ok, fmt("codec held-out MAE %.4f, mask accuracy %.4f (%.0fs); model held-out complement-F1 %.4f "
                  "after %d epochs (%.0fs)",
                  r.mae, r.mask_acc, r.seconds_codec, r.cf1, r.cfg.epochs, r.seconds_train)};
}

Outcome ablation_order() {
  auto& r = learning();
  // The full row is the criterion-5 model: same config, seed, data and budget.
  const std::vector<std::string> variants{"no_srm_flmm", "no_vae_lmm", "no_lmm", "no_codec_pretrain"};
  std::map<std::string, double> cf1{{"full", r.cf1}};
  run_ablation(r.cfg, *r.codec, r.train_set, r.test_set, variants, [&](const AblationRow& row) {
    cf1[row.variant] = row.f1_complement_max;
    progress(fmt("ablation %s complement-F1 %.4f", row.variant.c_str(), row.f1_complement_max));
  });
  bool ok = true;
  std::string detail = fmt("full %.4f", r.cf1);
  for (const auto& v : variants) {
    const double gap = r.cf1 - cf1.at(v);
    ok = ok && gap >= 0.02;
    detail += fmt(", %s %.4f (gap %+.4f)", v.c_str(), cf1.at(v), gap);
  }
  return {ok, detail};
}

Outcome robustness_trend() {
  auto& r = learning();
  const auto grid = parse_grid("noise=0.1,0.3,0.5;jpeg=90,80,70;osn=heavy", 7);
  const SdiflModel& model = *r.model;
  const auto report = run_suite([&](const ImageTensor& img) { return model.infer(img); }, r.test_set, grid,
                                model.factor(), config_hash(model.config));
  auto f1 = [&](const std::string& tag) { return report.summary.at(tag).f1; };
  // Chains that must not increase; a single rise of at most 0.01 is tolerated.
  const std::vector<std::vector<std::string>> chains{{"jpeg90", "jpeg80", "jpeg70"},
                                                     {"noise0.1", "noise0.3", "noise0.5"}};
  int inversions = 0;
  double worst = 0.0;
  for (const auto& chain : chains)
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
      const double rise = f1(chain[i + 1]) - f1(chain[i]);
      if (rise > 0.0) {
        ++inversions;
        worst = std::max(worst, rise);
      }
    }
  const bool ok = (inversions == 0 || (inversions == 1 && worst <= 0.01)) && f1("none") >= f1("osn_heavy");
  return {ok, fmt("F1 none %.4f | jpeg90 %.4f jpeg80 %.4f jpeg70 %.4f | noise0.1 %.4f noise0.3 %.4f "
                  "noise0.5 %.4f | osn_heavy %.4f | inversions %d (max rise %.4f)",
                  f1("none"), f1("jpeg90"), f1("jpeg80"), f1("jpeg70"), f1("noise0.1"), f1("noise0.3"),
                  f1("noise0.5"), f1("osn_heavy"), inversions, worst)};
}

// ---------------------------------------------------------------- 8 determinism

int run_cli(const std::string& cli, const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + cli + "\" " + args + " >> \"" + log.string() + "\" 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const std::string& cli, const fs::path& workdir) {
  if (cli.empty() || !fs::exists(cli)) return {false, "sdifl CLI not found (pass --cli)"};
  const fs::path dir = workdir / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path log = dir / "cli.log";
  auto q = [](const fs::path& p) { return "\"" + p.string() + "\""; };
  int rc = 0;
  rc |= run_cli(cli, "synth --out " + q(dir / "train") + " --count 64 --size 32 --seed 1000", log);
  rc |= run_cli(cli, "synth --out " + q(dir / "test") + " --count 16 --size 32 --seed 5000 --split test", log);
  rc |= run_cli(cli, "pretrain-codec --manifest " + q(dir / "train") + " --out " + q(dir / "codec") +
                         " --set epochs=2 --set codec.latent_channels=12 --set codec.decoder_width=8",
                log);
  const std::string train_flags = " --codec " + q(dir / "codec") + " --manifest " + q(dir / "train") +
                                  " --set epochs=2 --set warmup_epochs=1 --set learning_rate=0.001"
                                  " --set lmm.width=8 --set flmm.dim=16 --set flmm.depth=1"
                                  " --set flmm.out_channels=8 --set seed=3";
  std::array<std::string, 2> reports;
  for (int run = 0; run < 2; ++run) {
    const fs::path model = dir / ("model" + std::to_string(run));
    const fs::path eval = dir / ("eval" + std::to_string(run));
    rc |= run_cli(cli, "train --out " + q(model) + train_flags, log);
    rc |= run_cli(cli, "eval --checkpoint " + q(model) + " --manifest " + q(dir / "test") + " --out " + q(eval), log);
    reports[run] = slurp(eval / "report.json");
  }
  const bool weights_same = slurp(dir / "model0" / "weights.bin") == slurp(dir / "model1" / "weights.bin");
  const bool ok = rc == 0 && !reports[0].empty() && reports[0] == reports[1] && weights_same;
  return {ok, fmt("CLI exit status %d, report bytes %zu vs %zu, identical: %s, weights identical: %s", rc,
                  reports[0].size(), reports[1].size(), reports[0] == reports[1] ? "yes" : "no",
                  weights_same ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string workdir = "acceptance_work";
#ifdef SDIFL_CLI_PATH
  std::string cli = SDIFL_CLI_PATH;
#else
  std::string cli;
#endif
  std::vector<int> only;
  app.add_option("--workdir", workdir, "Scratch directory")->capture_default_str();
  app.add_option("--cli", cli, "Path to the sdifl executable")->capture_default_str();
  app.add_option("--only", only, "Run only these criteria (1-8), comma-separated")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(workdir);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"theory suite", theory_suite},
      {"residual suite", residual_suite},
      {"objective suite", objective_suite},
      {"metrics suite", metrics_suite},
      {"end-to-end learning", end_to_end},
      {"ablation ordering", ablation_order},
      {"robustness trend", robustness_trend},
      {"determinism", [&] { return determinism(cli, workdir); }},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  return failed;
}
