#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "plot.hpp"
#include "sdifl/errors.hpp"
#include "sdifl/forge.hpp"
#include "sdifl/hash.hpp"
#include "sdifl/png_io.hpp"
#include "sdifl/robustness.hpp"
#include "sdifl/srm.hpp"
#include "sdifl/theory.hpp"
#include "sdifl/train.hpp"
#include "sdifl/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace sdifl;

namespace {

const char* kManifestName = "manifest.jsonl";
const char* kRunManifestName = "run_manifest.json";

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileMissing("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

// Written beside every command's outputs; the only file that carries a timestamp.
void write_run_manifest(const fs::path& dir, const std::string& command,
                        const std::vector<std::string>& argv, const std::string& config_hash,
                        const json& seeds) {
  const auto v = component_versions();
  json j{{"command", command},
         {"argv", argv},
         {"config_hash", config_hash},
         {"seeds", seeds},
         {"versions", {{"sdifl", v.sdifl}, {"eigen", v.eigen}, {"libpng", v.libpng}, {"jpeg", v.jpeg}}},
         {"timestamp", utc_timestamp()}};
  write_text(dir / kRunManifestName, j.dump(2) + "\n");
}

fs::path manifest_path(const fs::path& p) { return fs::is_directory(p) ? p / kManifestName : p; }

std::vector<Sample> samples_from(const fs::path& manifest) {
  const auto path = manifest_path(manifest);
  if (!fs::exists(path)) throw FileMissing("manifest not found: " + path.string());
  return load_samples(read_manifest(path), path.parent_path());
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::pair<int, int> parse_size(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) {
      const int s = std::stoi(text);
      return {s, s};
    }
    return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw UsageError("--size expects N or HxW, got '" + text + "'");
  }
}

TrainConfig load_train_config(const std::string& path, const std::vector<std::string>& overrides) {
  TrainConfig cfg;
  if (!path.empty()) {
    try {
      cfg = train_config_from_json(read_text(path));
    } catch (const SchemaError& e) {
      throw UsageError(std::string("--config: ") + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(cfg, o);
  cfg.validate();
  return cfg;
}

CodecPretrainConfig load_codec_config(const std::string& path, const std::vector<std::string>& overrides) {
  CodecPretrainConfig cfg;
  if (!path.empty()) {
    try {
      cfg = codec_config_from_json(read_text(path));
    } catch (const SchemaError& e) {
      throw UsageError(std::string("--config: ") + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(cfg, o);
  return cfg;
}

void write_summary_csv(const EvalReport& report, const fs::path& path) {
  std::ostringstream out;
  out << "perturbation,count,precision,recall,iou,f1,f1_complement_max\n";
  out << std::setprecision(17);
  for (const auto& [tag, r] : report.summary)
    out << tag << ',' << r.count << ',' << r.precision << ',' << r.recall << ',' << r.iou << ','
        << r.f1 << ',' << r.f1_complement_max << '\n';
  write_text(path, out.str());
}

// ---------------------------------------------------------------- commands

struct SynthArgs {
  std::string out;
  int count = 100;
  std::string size = "64";
  std::string kinds = "copy-move,splice,inpaint";
  std::uint64_t seed = 0;
  std::string split = "train";
};

void run_synth(const SynthArgs& a, const std::vector<std::string>& argv) {
  if (a.count <= 0) throw UsageError("--count must be positive");
  const auto [h, w] = parse_size(a.size);
  std::vector<ForgeryKind> kinds;
  for (const auto& k : split_list(a.kinds)) kinds.push_back(parse_kind(k));
  if (kinds.empty()) throw UsageError("--kinds is empty");
  const Split split = parse_split(a.split);

  fs::create_directories(a.out);
  const auto samples = synthesize_set(a.seed, a.count, kinds, h, w);
  const auto manifest = write_samples(a.out, samples, split);
  write_manifest(manifest, fs::path(a.out) / kManifestName);
  const json params{{"count", a.count}, {"height", h}, {"width", w},
                    {"kinds", a.kinds}, {"seed", a.seed}, {"split", a.split}};
  write_run_manifest(a.out, "synth", argv, hash_text(params.dump()), {{"base_seed", a.seed}});
  std::cout << "wrote " << samples.size() << " samples to " << a.out << "\n";
}

struct PretrainArgs {
  std::string manifest, out, config;
  std::vector<std::string> overrides;
  std::string holdout;
};

void run_pretrain(const PretrainArgs& a, const std::vector<std::string>& argv) {
  const auto cfg = load_codec_config(a.config, a.overrides);
  const auto samples = samples_from(a.manifest);
  std::vector<ImageTensor> images;
  std::vector<MaskTensor> masks;
  for (const auto& s : samples) {
    images.push_back(s.image);
    if (s.mask.sum() > 0) masks.push_back(s.mask);
  }
  fs::create_directories(a.out);
  std::ofstream log(fs::path(a.out) / "codec_log.jsonl");
  const auto result = pretrain_codec(images, masks, cfg, [&](int epoch, double loss) {
    const json line{{"epoch", epoch}, {"loss", loss}};
    log << line.dump() << "\n" << std::flush;
    std::cout << "epoch " << epoch << " loss " << loss << "\n" << std::flush;
  });
  save_codec(result, cfg, a.out);
  cli::line_plot(fs::path(a.out) / "codec_loss.png",
                 {{result.epoch_loss, cli::palette()[0]}, {result.best_so_far, cli::palette()[1]}});

  json metrics{{"content_hash", result.codec.content_hash()}};
  if (!a.holdout.empty()) {
    const auto held = samples_from(a.holdout);
    std::vector<ImageTensor> hi;
    std::vector<MaskTensor> hm;
    for (const auto& s : held) {
      hi.push_back(s.image);
      hm.push_back(s.mask);
    }
    metrics["holdout_mae"] = reconstruction_mae(result.codec, hi);
    metrics["holdout_mask_accuracy"] = mask_roundtrip_accuracy(result.codec, hm);
    std::cout << "held-out MAE " << metrics["holdout_mae"].get<double>() << ", mask accuracy "
              << metrics["holdout_mask_accuracy"].get<double>() << "\n";
  }
  write_text(fs::path(a.out) / "codec_metrics.json", metrics.dump(2) + "\n");
  write_run_manifest(a.out, "pretrain-codec", argv, hash_text(to_json_string(cfg)),
                     {{"codec_seed", cfg.codec.seed}, {"pretrain_seed", cfg.seed}});
}

struct TrainArgs {
  std::string config, codec, manifest, out;
  std::vector<std::string> overrides;
};

void run_train(const TrainArgs& a, const std::vector<std::string>& argv) {
  auto cfg = load_train_config(a.config, a.overrides);
  if (!a.codec.empty()) cfg.codec_checkpoint = a.codec;
  if (cfg.codec_checkpoint.empty()) throw UsageError("--codec is required (or codec_checkpoint in --config)");
  const auto pretrained = load_codec(cfg.codec_checkpoint);
  const auto samples = samples_from(a.manifest);

  fs::create_directories(a.out);
  std::ofstream log(fs::path(a.out) / "train_log.jsonl");
  TrainCallbacks cb;
  cb.on_step = [&](const TrainLogEntry& e) { log << to_json_line(e) << "\n"; };
  cb.on_epoch = [&](int epoch, double loss) {
    log << std::flush;
    std::cout << "epoch " << epoch << " loss " << loss << "\n" << std::flush;
  };
  const auto model = train(cfg, codec_for(cfg, pretrained), samples, cb);
  save_model(model, a.out);
  write_text(fs::path(a.out) / "config.json", to_json_string(cfg) + "\n");
  cli::line_plot(fs::path(a.out) / "loss_curve.png", {{model.loss_history, cli::palette()[0]}});
  write_run_manifest(a.out, "train", argv, config_hash(cfg), {{"seed", cfg.seed}});
}

struct EvalArgs {
  std::string checkpoint, manifest, out;
  int overlays = 0;
  bool dump_residuals = false;
};

void run_eval(const EvalArgs& a, const std::vector<std::string>& argv) {
  const auto model = load_model(a.checkpoint);
  const auto samples = samples_from(a.manifest);
  fs::create_directories(a.out);
  const auto report = evaluate(model, samples);
  write_report(report, fs::path(a.out) / "report.json");
  write_report_csv(report, fs::path(a.out) / "report.csv");

  const int n_overlay = std::min<int>(a.overlays, static_cast<int>(samples.size()));
  if (n_overlay > 0) fs::create_directories(fs::path(a.out) / "overlays");
  for (int i = 0; i < n_overlay; ++i) {
    const auto& s = samples[i];
    cli::save_overlay(fs::path(a.out) / "overlays" / (fs::path(sample_id(s, i)).stem().string() + ".png"),
                      s.image, s.mask, binarize(model.infer(s.image)));
  }
  if (a.dump_residuals) {
    fs::create_directories(fs::path(a.out) / "residuals");
    for (std::size_t i = 0; i < samples.size(); ++i)
      cli::save_residual(fs::path(a.out) / "residuals" / (fs::path(sample_id(samples[i], i)).stem().string() + ".png"),
                         extract_residuals(samples[i].image));
  }
  const auto& none = report.summary.at("none");
  std::cout << "images " << none.count << "  f1 " << none.f1 << "  f1_complement_max "
            << none.f1_complement_max << "  iou " << none.iou << "\n";
  write_run_manifest(a.out, "eval", argv, report.config_hash, {{"seed", model.config.seed}});
}

struct RobustnessArgs {
  std::string checkpoint, manifest, out;
  std::string grid = "noise=0.1,0.3,0.5;jpeg=90,80,70;resize=0.9,0.8,0.7;osn=light,medium,heavy";
  std::uint64_t seed = 0;
};

void run_robustness(const RobustnessArgs& a, const std::vector<std::string>& argv) {
  const auto grid = parse_grid(a.grid, a.seed);
  const auto model = load_model(a.checkpoint);
  const auto samples = samples_from(a.manifest);
  fs::create_directories(a.out);
  const auto report = run_suite([&](const ImageTensor& img) { return model.infer(img); }, samples, grid,
                                model.factor(), config_hash(model.config));
  write_report(report, fs::path(a.out) / "robustness.json");
  write_report_csv(report, fs::path(a.out) / "robustness.csv");
  write_summary_csv(report, fs::path(a.out) / "robustness_summary.csv");

  // One series per perturbation family, in grid order, each starting at "none".
  std::vector<cli::Series> series;
  std::size_t color = 0;
  for (auto kind : {PerturbationKind::kGaussianNoise, PerturbationKind::kJpeg, PerturbationKind::kResize,
                    PerturbationKind::kOsnChain}) {
    cli::Series s{{report.summary.at("none").f1}, cli::palette()[color++]};
    for (const auto& p : grid)
      if (p.kind == kind) s.y.push_back(report.summary.at(p.tag()).f1);
    if (s.y.size() > 1) series.push_back(std::move(s));
  }
  cli::line_plot(fs::path(a.out) / "robustness_f1.png", series, 0.0, 1.0);
  for (const auto& p : grid)
    std::cout << std::left << std::setw(12) << p.tag() << " f1 " << report.summary.at(p.tag()).f1 << "\n";
  write_run_manifest(a.out, "robustness", argv, report.config_hash,
                     {{"noise_seed", a.seed}, {"train_seed", model.config.seed}});
}

struct AblateArgs {
  std::string config, codec, manifest, test_manifest, out;
  std::string variants = "full,no_srm_flmm,no_vae_lmm,no_lmm,no_codec_pretrain";
  std::vector<std::string> overrides;
};

void run_ablate(const AblateArgs& a, const std::vector<std::string>& argv) {
  auto cfg = load_train_config(a.config, a.overrides);
  if (!a.codec.empty()) cfg.codec_checkpoint = a.codec;
  if (cfg.codec_checkpoint.empty()) throw UsageError("--codec is required (or codec_checkpoint in --config)");
  const auto variants = split_list(a.variants);
  if (variants.empty()) throw UsageError("--variants is empty");
  const auto pretrained = load_codec(cfg.codec_checkpoint);
  const auto train_set = samples_from(a.manifest);
  const auto test_set = samples_from(a.test_manifest);
  fs::create_directories(a.out);

  const auto rows = run_ablation(cfg, pretrained, train_set, test_set, variants, [](const AblationRow& r) {
    std::cout << std::left << std::setw(18) << r.variant << " f1 " << r.f1 << "  f1_complement_max "
              << r.f1_complement_max << "  iou " << r.iou << "\n"
              << std::flush;
  });
  json j{{"config_hash", config_hash(cfg)}, {"rows", json::array()}};
  std::ostringstream csv;
  csv << "variant,f1,f1_complement_max,iou\n" << std::setprecision(17);
  for (const auto& r : rows) {
    j["rows"].push_back({{"variant", r.variant}, {"f1", r.f1}, {"f1_complement_max", r.f1_complement_max},
                         {"iou", r.iou}});
    csv << r.variant << ',' << r.f1 << ',' << r.f1_complement_max << ',' << r.iou << '\n';
  }
  write_text(fs::path(a.out) / "ablation.json", j.dump(2) + "\n");
  write_text(fs::path(a.out) / "ablation.csv", csv.str());
  write_run_manifest(a.out, "ablate", argv, config_hash(cfg), {{"seed", cfg.seed}});
}

struct TheoryArgs {
  std::string out = "theory_out";
  std::uint64_t seed = theory::TheoryOptions{}.seed;
};

void run_theory(const TheoryArgs& a, const std::vector<std::string>& argv) {
  theory::TheoryOptions opt;
  opt.seed = a.seed;
  const auto report = theory::run_theory_suite(opt);
  fs::create_directories(a.out);
  write_text(fs::path(a.out) / "theory_report.json", theory::theory_report_json(report) + "\n");
  std::cout << "spectral fold max error  " << report.fold_max_err << "\n"
            << "MI gain min (bits)        " << report.mi_gain_min << "\n"
            << "XOR MI gain (bits)        " << report.xor_gain << "\n"
            << "Jensen gap min            " << report.jensen_gap_min << "\n"
            << "gap with exact posterior  " << report.jensen_posterior_max_gap << "\n";
  write_run_manifest(a.out, "theory", argv, hash_text(json{{"seed", a.seed}}.dump()), {{"seed", a.seed}});
}

void run_version() {
  const auto v = component_versions();
  std::cout << "sdifl " << v.sdifl << "\n"
            << "eigen " << v.eigen << "\n"
            << "libpng " << v.libpng << "\n"
            << "jpeg " << v.jpeg << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Forgery localization in a latent space with residual conditioning"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic forgery dataset with masks");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--count", synth.count, "Number of samples")->capture_default_str();
  c_synth->add_option("--size", synth.size, "Image size, N or HxW")->capture_default_str();
  c_synth->add_option("--kinds", synth.kinds, "Comma-separated kinds: copy-move, splice, inpaint, pristine")
      ->capture_default_str();
  c_synth->add_option("--seed", synth.seed, "Base seed; sample i uses seed + i")->capture_default_str();
  c_synth->add_option("--split", synth.split, "Manifest split: train, val or test")->capture_default_str();

  PretrainArgs pretrain;
  auto* c_pre = app.add_subcommand("pretrain-codec", "Train and freeze the latent codec");
  c_pre->add_option("--manifest", pretrain.manifest, "Dataset manifest (file or directory)")->required();
  c_pre->add_option("--out", pretrain.out, "Codec checkpoint directory")->required();
  c_pre->add_option("--config", pretrain.config, "Codec pretraining config JSON (defaults if omitted)");
  c_pre->add_option("--set", pretrain.overrides, "Config override key=value (repeatable)");
  c_pre->footer("Default config:\n" + to_json_string(CodecPretrainConfig{}));
  c_pre->add_option("--holdout", pretrain.holdout, "Manifest used to report held-out MAE and mask accuracy");

  TrainArgs train_args;
  auto* c_train = app.add_subcommand("train", "Train the mapping networks against a frozen codec");
  c_train->add_option("--config", train_args.config, "Training config JSON (defaults if omitted)");
  c_train->add_option("--codec", train_args.codec, "Codec checkpoint directory (overrides codec_checkpoint)");
  c_train->add_option("--manifest", train_args.manifest, "Training manifest (file or directory)")->required();
  c_train->add_option("--out", train_args.out, "Model checkpoint directory")->required();
  c_train->add_option("--set", train_args.overrides, "Config override key=value (repeatable)");
  c_train->footer("Default config:\n" + to_json_string(TrainConfig{}));

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Score a trained model on a manifest");
  c_eval->add_option("--checkpoint", eval.checkpoint, "Model checkpoint directory")->required();
  c_eval->add_option("--manifest", eval.manifest, "Evaluation manifest (file or directory)")->required();
  c_eval->add_option("--out", eval.out, "Report directory")->required();
  c_eval->add_option("--overlays", eval.overlays, "Number of mask overlay PNGs to write")->capture_default_str();
  c_eval->add_flag("--dump-residuals", eval.dump_residuals, "Write SRM residual images");

  RobustnessArgs rob;
  auto* c_rob = app.add_subcommand("robustness", "Evaluate under a perturbation grid");
  c_rob->add_option("--checkpoint", rob.checkpoint, "Model checkpoint directory")->required();
  c_rob->add_option("--manifest", rob.manifest, "Evaluation manifest (file or directory)")->required();
  c_rob->add_option("--grid", rob.grid, "Perturbation grid")->capture_default_str();
  c_rob->add_option("--seed", rob.seed, "Noise seed")->capture_default_str();
  c_rob->add_option("--out", rob.out, "Report directory")->required();

  AblateArgs ablate;
  auto* c_abl = app.add_subcommand("ablate", "Train and score ablation variants under one budget");
  c_abl->add_option("--config", ablate.config, "Base training config JSON (defaults if omitted)");
  c_abl->add_option("--codec", ablate.codec, "Codec checkpoint directory");
  c_abl->add_option("--manifest", ablate.manifest, "Training manifest")->required();
  c_abl->add_option("--test-manifest", ablate.test_manifest, "Held-out manifest")->required();
  c_abl->add_option("--variants", ablate.variants, "Comma-separated variants")->capture_default_str();
  c_abl->add_option("--set", ablate.overrides, "Config override key=value (repeatable)");
  c_abl->footer("Default config: see `sdifl train --help`.");
  c_abl->add_option("--out", ablate.out, "Output directory")->required();

  TheoryArgs th;
  auto* c_th = app.add_subcommand("theory", "Run the numerical theory checks");
  c_th->add_option("--out", th.out, "Output directory")->capture_default_str();
  c_th->add_option("--seed", th.seed, "Seed")->capture_default_str();

  auto* c_ver = app.add_subcommand("version", "Print library and codec versions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;
    if (app.get_subcommands().empty()) std::cerr << app.help();
    return 1;
  }

  try {
    if (c_synth->parsed()) run_synth(synth, args);
    else if (c_pre->parsed()) run_pretrain(pretrain, args);
    else if (c_train->parsed()) run_train(train_args, args);
    else if (c_eval->parsed()) run_eval(eval, args);
    else if (c_rob->parsed()) run_robustness(rob, args);
    else if (c_abl->parsed()) run_ablate(ablate, args);
    else if (c_th->parsed()) run_theory(th, args);
    else if (c_ver->parsed()) run_version();
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
