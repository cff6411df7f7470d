#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "sdifl/codec.hpp"
#include "sdifl/forge.hpp"
#include "sdifl/mapping.hpp"
#include "sdifl/metrics.hpp"
#include "sdifl/objective.hpp"

namespace sdifl {

// ---------------------------------------------------------------- codec

struct CodecPretrainConfig {
  CodecConfig codec;
  int epochs = 6;
  int batch_size = 8;
  double learning_rate = 2e-3;
  std::uint64_t seed = 11;
};

std::string to_json_string(const CodecPretrainConfig& cfg);
CodecPretrainConfig codec_config_from_json(std::string_view text);  // unknown keys -> SchemaError
// "key=value" with dotted nested keys ("codec.factor=8"). Throws UsageError.
void apply_override(CodecPretrainConfig& cfg, std::string_view assignment);

struct CodecPretrainResult {
  Codec<float> codec;
  std::vector<double> epoch_loss;
  std::vector<double> best_so_far;  // running minimum of epoch_loss
};

// Minimizes mean squared reconstruction error over the images and the
// three-channel replicated masks, then freezes the codec. Throws
// NonFiniteLoss.
CodecPretrainResult pretrain_codec(const std::vector<ImageTensor>& images,
                                   const std::vector<MaskTensor>& masks,
                                   const CodecPretrainConfig& cfg,
                                   const std::function<void(int epoch, double loss)>& on_epoch = {});

double reconstruction_mae(const Codec<float>& codec, const std::vector<ImageTensor>& images);
// Fraction of pixels where channel-mean(decode(encode_mask(m))) > 0.5 agrees with m.
double mask_roundtrip_accuracy(const Codec<float>& codec, const std::vector<MaskTensor>& masks);

void save_codec(const CodecPretrainResult& result, const CodecPretrainConfig& cfg,
                const std::filesystem::path& dir);
Codec<float> load_codec(const std::filesystem::path& dir);

// ---------------------------------------------------------------- training

// One forward/backward pass of the full pipeline for a single sample:
// Z_hat = fuse(lmm(z_image), flmm(residual)); M_hat = channel-mean(decode(Z_hat));
// loss = L_lm(z_mask, Z_hat) + L_loc(mask, M_hat). When `backward` is set,
// parameter gradients of `nets` are accumulated (the codec is never touched).
template <class T>
LossBreakdown pipeline_step(const Codec<T>& codec, MappingNets<T>& nets,
                            const nn::FeatureMap<T>& z_image, const nn::FeatureMap<T>& z_mask,
                            const nn::FeatureMap<T>& residual, std::span<const T> mask,
                            bool backward);

struct TrainConfig {
  double learning_rate = 1e-4;
  int warmup_epochs = 5;
  int epochs = 30;
  int batch_size = 4;
  std::uint64_t seed = 0;
  Ablation ablation;
  std::string codec_checkpoint;
  double weight_decay = 0.01;
  LmmConfig lmm;
  FlmmConfig flmm;

  void validate() const;  // throws UsageError
};

std::string to_json_string(const TrainConfig& cfg);
// Unknown keys are rejected with SchemaError.
TrainConfig train_config_from_json(std::string_view text);
// "key=value"; nested keys use dots ("lmm.width=32"). Throws UsageError for
// keys the config does not have.
void apply_override(TrainConfig& cfg, std::string_view assignment);
std::string config_hash(const TrainConfig& cfg);

struct TrainLogEntry {
  int epoch = 0;
  long step = 0;
  double lm = 0, loc = 0, total = 0, lr = 0;
};

std::string to_json_line(const TrainLogEntry& e);

struct SdiflModel {
  TrainConfig config;
  Codec<float> codec;
  MappingNets<float> nets;
  std::string codec_hash;
  int epoch = 0;
  std::vector<double> loss_history;  // mean total loss per epoch

  // channel-mean(decode(fuse(lmm(encode(x)), flmm(srm(x))))) in [0,1].
  // Throws ShapeError when H or W is not divisible by s.
  ProbMap infer(const ImageTensor& image) const;
  int factor() const { return codec.factor(); }
};

struct TrainCallbacks {
  std::function<void(const TrainLogEntry&)> on_step;
  std::function<void(int epoch, double mean_total)> on_epoch;
};

// Trains LMM/FLMM/fusion against a frozen codec. Deterministic given the
// config seed. Throws EmptyInput, NonFiniteLoss, CodecHashMismatch.
SdiflModel train(const TrainConfig& cfg, const Codec<float>& codec,
                 const std::vector<Sample>& samples, const TrainCallbacks& callbacks = {});

// The frozen codec a config calls for: a random-init codec for the
// no_codec_pretrain ablation, the pretrained one otherwise.
Codec<float> codec_for(const TrainConfig& cfg, const Codec<float>& pretrained);

// Per-image records (binarized at 0.5, tag "none") and summary.
EvalReport evaluate(const SdiflModel& model, const std::vector<Sample>& samples);

void save_model(const SdiflModel& model, const std::filesystem::path& dir);
SdiflModel load_model(const std::filesystem::path& dir);

struct AblationRow {
  std::string variant;  // "full" or ablation name
  double f1 = 0.0;
  double f1_complement_max = 0.0;
  double iou = 0.0;
};

// Trains each variant with the same seed and budget and evaluates on `test`.
std::vector<AblationRow> run_ablation(const TrainConfig& base, const Codec<float>& pretrained,
                                      const std::vector<Sample>& train_set,
                                      const std::vector<Sample>& test_set,
                                      const std::vector<std::string>& variants,
                                      const std::function<void(const AblationRow&)>& on_row = {});

}  // namespace sdifl
