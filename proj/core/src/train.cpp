#include "sdifl/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "sdifl/checkpoint.hpp"
#include "sdifl/errors.hpp"
#include "sdifl/hash.hpp"
#include "sdifl/nn/optim.hpp"
#include "sdifl/png_io.hpp"
#include "sdifl/rng.hpp"
#include "sdifl/robustness.hpp"
#include "sdifl/srm.hpp"

namespace sdifl {

using json = nlohmann::ordered_json;

namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

json parse_object(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("config must be a JSON object");
  return j;
}

template <class V>
V get_as(const json& j, const std::string& key) {
  try {
    return j.get<V>();
  } catch (const json::exception&) {
    throw SchemaError("bad value for '" + key + "'");
  }
}

json codec_json(const CodecConfig& c) {
  return json{{"factor", c.factor},
              {"latent_channels", c.latent_channels},
              {"decoder_width", c.decoder_width},
              {"seed", c.seed}};
}

CodecConfig codec_from(const json& j) {
  CodecConfig c;
  for (const auto& [k, v] : j.items()) {
    if (k == "factor") c.factor = get_as<int>(v, k);
    else if (k == "latent_channels") c.latent_channels = get_as<int>(v, k);
    else if (k == "decoder_width") c.decoder_width = get_as<int>(v, k);
    else if (k == "seed") c.seed = get_as<std::uint64_t>(v, k);
    else throw SchemaError("unknown codec key '" + k + "'");
  }
  return c;
}

json lmm_json(const LmmConfig& c) { return json{{"blocks", c.blocks}, {"width", c.width}}; }

json flmm_json(const FlmmConfig& c) {
  return json{{"patch", c.patch},         {"dim", c.dim},
              {"depth", c.depth},         {"heads", c.heads},
              {"mlp_ratio", c.mlp_ratio}, {"out_channels", c.out_channels}};
}

json train_json(const TrainConfig& c) {
  const auto names = c.ablation.names();
  return json{{"learning_rate", c.learning_rate},
              {"warmup_epochs", c.warmup_epochs},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"seed", c.seed},
              {"ablation", std::vector<std::string>(names.begin(), names.end())},
              {"codec_checkpoint", c.codec_checkpoint},
              {"weight_decay", c.weight_decay},
              {"lmm", lmm_json(c.lmm)},
              {"flmm", flmm_json(c.flmm)}};
}

TrainConfig train_from(const json& j) {
  TrainConfig c;
  for (const auto& [k, v] : j.items()) {
    if (k == "learning_rate") c.learning_rate = get_as<double>(v, k);
    else if (k == "warmup_epochs") c.warmup_epochs = get_as<int>(v, k);
    else if (k == "epochs") c.epochs = get_as<int>(v, k);
    else if (k == "batch_size") c.batch_size = get_as<int>(v, k);
    else if (k == "seed") c.seed = get_as<std::uint64_t>(v, k);
    else if (k == "codec_checkpoint") c.codec_checkpoint = get_as<std::string>(v, k);
    else if (k == "weight_decay") c.weight_decay = get_as<double>(v, k);
    else if (k == "ablation") {
      const auto list = get_as<std::vector<std::string>>(v, k);
      try {
        c.ablation = Ablation::from_names({list.begin(), list.end()});
      } catch (const UsageError& e) {
        throw SchemaError(e.what());
      }
    } else if (k == "lmm") {
      if (!v.is_object()) throw SchemaError("'lmm' must be an object");
      for (const auto& [lk, lv] : v.items()) {
        if (lk == "blocks") c.lmm.blocks = get_as<int>(lv, lk);
        else if (lk == "width") c.lmm.width = get_as<int>(lv, lk);
        else throw SchemaError("unknown key 'lmm." + lk + "'");
      }
    } else if (k == "flmm") {
      if (!v.is_object()) throw SchemaError("'flmm' must be an object");
      for (const auto& [fk, fv] : v.items()) {
        if (fk == "patch") c.flmm.patch = get_as<int>(fv, fk);
        else if (fk == "dim") c.flmm.dim = get_as<int>(fv, fk);
        else if (fk == "depth") c.flmm.depth = get_as<int>(fv, fk);
        else if (fk == "heads") c.flmm.heads = get_as<int>(fv, fk);
        else if (fk == "mlp_ratio") c.flmm.mlp_ratio = get_as<int>(fv, fk);
        else if (fk == "out_channels") c.flmm.out_channels = get_as<int>(fv, fk);
        else throw SchemaError("unknown key 'flmm." + fk + "'");
      }
    } else {
      throw SchemaError("unknown config key '" + k + "'");
    }
  }
  return c;
}

double mean_sq(const nn::FeatureMap<float>& a, const nn::FeatureMap<float>& b) {
  return (a.data.cast<double>() - b.data.cast<double>()).squaredNorm() /
         static_cast<double>(a.data.size());
}

std::vector<float> flat_mask(const MaskTensor& m) {
  std::vector<float> out(m.data.size());
  std::transform(m.data.begin(), m.data.end(), out.begin(),
                 [](std::uint8_t v) { return static_cast<float>(v); });
  return out;
}

struct Prepared {
  nn::FeatureMap<float> z_image, z_mask, residual;
  std::vector<float> mask;
};

MappingConfig mapping_config(const TrainConfig& cfg, const Codec<float>& codec, int h, int w) {
  MappingConfig mc;
  mc.latent_channels = codec.latent_channels();
  mc.grid_height = h / codec.factor();
  mc.grid_width = w / codec.factor();
  mc.lmm = cfg.lmm;
  mc.flmm = cfg.flmm;
  mc.flmm.patch = codec.factor();
  mc.seed = cfg.seed;
  return mc;
}

void check_geometry(const Codec<float>& codec, int h, int w) {
  ShapeSpec spec{h, w, 3, codec.factor(), codec.latent_channels()};
  spec.validate();
}

// Sets a dotted key of `j` from "key=value". The value is parsed as JSON and
// kept as a plain string when that fails. Throws UsageError.
std::pair<std::string, json*> assign_override(json& j, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw UsageError("override must look like key=value: " + std::string(assignment));
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json* slot = &j;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (!slot->is_object() || !slot->contains(part)) throw UsageError("unknown config key '" + key + "'");
    slot = &(*slot)[part];
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  try {
    *slot = json::parse(raw);
  } catch (const json::exception&) {
    *slot = raw;
  }
  return {key, slot};
}

}  // namespace

// ---------------------------------------------------------------- codec

std::string to_json_string(const CodecPretrainConfig& cfg) {
  json j{{"codec", codec_json(cfg.codec)},
         {"epochs", cfg.epochs},
         {"batch_size", cfg.batch_size},
         {"learning_rate", cfg.learning_rate},
         {"seed", cfg.seed}};
  return j.dump(2);
}

CodecPretrainConfig codec_config_from_json(std::string_view text) {
  const json j = parse_object(text);
  CodecPretrainConfig c;
  for (const auto& [k, v] : j.items()) {
    if (k == "codec") c.codec = codec_from(v);
    else if (k == "epochs") c.epochs = get_as<int>(v, k);
    else if (k == "batch_size") c.batch_size = get_as<int>(v, k);
    else if (k == "learning_rate") c.learning_rate = get_as<double>(v, k);
    else if (k == "seed") c.seed = get_as<std::uint64_t>(v, k);
    else throw SchemaError("unknown key '" + k + "'");
  }
  return c;
}

void apply_override(CodecPretrainConfig& cfg, std::string_view assignment) {
  json j = json::parse(to_json_string(cfg));
  assign_override(j, assignment);
  try {
    cfg = codec_config_from_json(j.dump());
  } catch (const SchemaError& e) {
    throw UsageError(e.what());
  }
}

CodecPretrainResult pretrain_codec(const std::vector<ImageTensor>& images,
                                   const std::vector<MaskTensor>& masks,
                                   const CodecPretrainConfig& cfg,
                                   const std::function<void(int, double)>& on_epoch) {
  if (images.empty()) throw EmptyInput("no images to pretrain the codec on");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0))
    throw UsageError("codec pretraining needs epochs, batch_size and learning_rate > 0");

  std::vector<nn::FeatureMap<float>> inputs;
  inputs.reserve(images.size() + masks.size());
  for (const auto& im : images) {
    ShapeSpec{im.height, im.width, 3, cfg.codec.factor, cfg.codec.latent_channels}.validate();
    inputs.push_back(to_feature_map<float>(im));
  }
  for (const auto& m : masks) inputs.push_back(to_feature_map<float>(mask_as_image(m)));

  CodecPretrainResult result{Codec<float>(cfg.codec), {}, {}};
  Codec<float>& codec = result.codec;
  nn::AdamW<float> opt(codec.parameters(), {.weight_decay = 0.0});
  Rng rng(Rng::derive(cfg.seed, 0xc0dec));

  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);
  const long steps_per_epoch =
      static_cast<long>((inputs.size() + cfg.batch_size - 1) / cfg.batch_size);
  const long warmup = std::min<long>(steps_per_epoch, 50);

  double best = std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order, rng);
    double sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      opt.zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const auto& x = inputs[order[k]];
        EncoderTape<float> et;
        DecoderTape<float> dt;
        const auto z = codec.encode_map(x, &et);
        const auto y = codec.decode_map(z, &dt);
        const double loss = mean_sq(y, x);
        if (!std::isfinite(loss)) throw NonFiniteLoss("codec reconstruction loss is not finite");
        sum += loss;
        nn::FeatureMap<float> g{(y.data - x.data) * (2.0f / static_cast<float>(x.data.size())),
                                y.height, y.width};
        const auto gz = codec.decode_backward(g, dt);
        codec.encode_backward(gz, et);
      }
      opt.step(nn::warmup_lr(cfg.learning_rate, opt.steps() + 1, warmup),
               1.0 / static_cast<double>(end - start));
    }
    const double mean = sum / static_cast<double>(inputs.size());
    best = std::min(best, mean);
    result.epoch_loss.push_back(mean);
    result.best_so_far.push_back(best);
    if (on_epoch) on_epoch(epoch, mean);
  }
  codec.freeze();
  return result;
}

double reconstruction_mae(const Codec<float>& codec, const std::vector<ImageTensor>& images) {
  if (images.empty()) throw EmptyInput("no images");
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& im : images) {
    const auto rec = codec.decode(codec.encode(im));
    for (std::size_t i = 0; i < im.data.size(); ++i) sum += std::abs(rec.data[i] - im.data[i]);
    n += im.data.size();
  }
  return sum / static_cast<double>(n);
}

double mask_roundtrip_accuracy(const Codec<float>& codec, const std::vector<MaskTensor>& masks) {
  if (masks.empty()) throw EmptyInput("no masks");
  std::size_t agree = 0, n = 0;
  for (const auto& m : masks) {
    const auto rec = channel_mean(codec.decode(codec.encode_mask(m)));
    for (std::size_t i = 0; i < m.data.size(); ++i) {
      agree += static_cast<std::uint8_t>(rec.data[i] > 0.5) == m.data[i];
    }
    n += m.data.size();
  }
  return static_cast<double>(agree) / static_cast<double>(n);
}

void save_codec(const CodecPretrainResult& result, const CodecPretrainConfig& cfg,
                const std::filesystem::path& dir) {
  Checkpoint ckpt;
  ckpt.seed = cfg.seed;
  ckpt.config_hash = hash_text(to_json_string(cfg));
  const auto& codec = result.codec;
  add_tensors<float>(ckpt, codec.parameters(), "codec.");
  json meta{{"kind", "codec"},
            {"codec", codec_json(codec.config())},
            {"pretrain", json::parse(to_json_string(cfg))},
            {"content_hash", codec.content_hash()},
            {"epoch_loss", result.epoch_loss},
            {"best_so_far", result.best_so_far}};
  ckpt.meta_json = meta.dump();
  save_checkpoint(ckpt, dir);
}

namespace {

Codec<float> codec_from_checkpoint(const Checkpoint& ckpt, const json& codec_cfg,
                                   const std::string& expected_hash) {
  Codec<float> codec(codec_from(codec_cfg));
  restore_tensors<float>(ckpt, codec.parameters(), "codec.");
  codec.freeze();
  if (codec.content_hash() != expected_hash)
    throw CodecHashMismatch("codec weights do not match the recorded hash " + expected_hash);
  return codec;
}

json parse_meta(const Checkpoint& ckpt, const char* kind) {
  const json meta = json::parse(ckpt.meta_json);
  if (!meta.is_object() || meta.value("kind", "") != kind)
    throw SchemaError(std::string("checkpoint is not a ") + kind + " checkpoint");
  return meta;
}

}  // namespace

Codec<float> load_codec(const std::filesystem::path& dir) {
  const auto ckpt = load_checkpoint(dir);
  const json meta = parse_meta(ckpt, "codec");
  try {
    return codec_from_checkpoint(ckpt, meta.at("codec"), meta.at("content_hash").get<std::string>());
  } catch (const json::exception& e) {
    throw SchemaError(std::string("codec checkpoint metadata: ") + e.what());
  }
}

// ---------------------------------------------------------------- training

template <class T>
LossBreakdown pipeline_step(const Codec<T>& codec, MappingNets<T>& nets,
                            const nn::FeatureMap<T>& z_image, const nn::FeatureMap<T>& z_mask,
                            const nn::FeatureMap<T>& residual, std::span<const T> mask,
                            bool backward) {
  MappingTape<T> mt;
  DecoderTape<T> dt;
  const auto z_hat = nets.forward(z_image, residual, backward ? &mt : nullptr);
  const auto out = codec.decode_map(z_hat, &dt);
  const Eigen::Index n = out.data.cols();
  if (static_cast<Eigen::Index>(mask.size()) != n) throw ShapeError("mask does not match output");

  Eigen::Matrix<T, 1, Eigen::Dynamic> m_hat = out.data.colwise().mean();
  const std::span<const T> zm(z_mask.data.data(), z_mask.data.size());
  const std::span<const T> zh(z_hat.data.data(), z_hat.data.size());
  const std::span<const T> mh(m_hat.data(), m_hat.size());

  LossBreakdown lb;
  lb.lm = static_cast<double>(latent_matching_loss<T>(zm, zh));
  lb.loc = static_cast<double>(dice_loss<T>(mask, mh));
  lb.total = lb.lm + lb.loc;
  if (!backward) return lb;

  Eigen::Matrix<T, 1, Eigen::Dynamic> g_mhat = Eigen::Matrix<T, 1, Eigen::Dynamic>::Zero(n);
  dice_grad<T>(mask, mh, std::span<T>(g_mhat.data(), g_mhat.size()));
  nn::FeatureMap<T> g_out{nn::Mat<T>(out.data.rows(), n), out.height, out.width};
  g_out.data.rowwise() = g_mhat / static_cast<T>(out.data.rows());

  auto g_z = codec.decode_input_grad(g_out, dt);
  latent_matching_grad<T>(zm, zh, std::span<T>(g_z.data.data(), g_z.data.size()));
  nets.backward(g_z, mt);
  return lb;
}

template LossBreakdown pipeline_step<float>(const Codec<float>&, MappingNets<float>&,
                                            const nn::FeatureMap<float>&,
                                            const nn::FeatureMap<float>&,
                                            const nn::FeatureMap<float>&, std::span<const float>,
                                            bool);
template LossBreakdown pipeline_step<double>(const Codec<double>&, MappingNets<double>&,
                                             const nn::FeatureMap<double>&,
                                             const nn::FeatureMap<double>&,
                                             const nn::FeatureMap<double>&,
                                             std::span<const double>, bool);

void TrainConfig::validate() const {
  if (!(learning_rate > 0) || !std::isfinite(learning_rate))
    throw UsageError("learning_rate must be positive");
  if (warmup_epochs < 0) throw UsageError("warmup_epochs must be >= 0");
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (weight_decay < 0) throw UsageError("weight_decay must be >= 0");
  if (lmm.blocks < 0 || lmm.width < 1) throw UsageError("invalid lmm settings");
  if (flmm.dim < 1 || flmm.depth < 0 || flmm.heads < 1 || flmm.dim % flmm.heads != 0 ||
      flmm.mlp_ratio < 1 || flmm.out_channels < 1)
    throw UsageError("invalid flmm settings");
  if (ablation.no_srm_flmm && ablation.no_vae_lmm)
    throw UsageError("no_srm_flmm and no_vae_lmm together leave no input");
}

std::string to_json_string(const TrainConfig& cfg) { return train_json(cfg).dump(2); }

TrainConfig train_config_from_json(std::string_view text) { return train_from(parse_object(text)); }

void apply_override(TrainConfig& cfg, std::string_view assignment) {
  json j = train_json(cfg);
  const auto [key, slot] = assign_override(j, assignment);
  if (key == "ablation" && slot->is_string()) {
    const auto s = slot->get<std::string>();
    json names = json::array();
    std::size_t p = 0;
    while (p <= s.size() && !s.empty()) {
      const auto comma = s.find(',', p);
      const auto name = s.substr(p, comma == std::string::npos ? std::string::npos : comma - p);
      if (!name.empty()) names.push_back(name);
      if (comma == std::string::npos) break;
      p = comma + 1;
    }
    *slot = names;
  }
  try {
    cfg = train_from(j);
  } catch (const SchemaError& e) {
    throw UsageError(e.what());
  }
}

std::string config_hash(const TrainConfig& cfg) { return hash_text(train_json(cfg).dump()); }

std::string to_json_line(const TrainLogEntry& e) {
  return json{{"epoch", e.epoch}, {"step", e.step}, {"lm", e.lm},
              {"loc", e.loc},     {"total", e.total}, {"lr", e.lr}}
      .dump();
}

ProbMap SdiflModel::infer(const ImageTensor& image) const {
  check_geometry(codec, image.height, image.width);
  const auto z = codec.encode(image);
  const auto r = to_feature_map<float>(extract_residuals(image));
  const auto z_hat = nets.forward(z, r);
  return channel_mean(codec.decode(z_hat));
}

SdiflModel train(const TrainConfig& cfg, const Codec<float>& codec,
                 const std::vector<Sample>& samples, const TrainCallbacks& callbacks) {
  cfg.validate();
  if (samples.empty()) throw EmptyInput("no training samples");
  const int h = samples.front().image.height, w = samples.front().image.width;
  check_geometry(codec, h, w);
  const std::string hash_before = codec.content_hash();

  std::vector<Prepared> data;
  data.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.image.height != h || s.image.width != w)
      throw ShapeError("training samples must share one resolution");
    check_pair(s.image, s.mask);
    data.push_back({codec.encode(s.image), codec.encode_mask(s.mask),
                    to_feature_map<float>(extract_residuals(s.image)), flat_mask(s.mask)});
  }

  SdiflModel model{cfg, codec, MappingNets<float>(mapping_config(cfg, codec, h, w), cfg.ablation),
                   hash_before, 0, {}};
  model.codec.freeze();
  nn::AdamW<float> opt(model.nets.trainable_parameters(), {.weight_decay = cfg.weight_decay});
  Rng rng(Rng::derive(cfg.seed, 0x5f));

  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  const long steps_per_epoch = static_cast<long>((data.size() + bs - 1) / bs);
  const long warmup_steps = steps_per_epoch * cfg.warmup_epochs;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      opt.zero_grad();
      LossBreakdown acc;
      for (std::size_t k = start; k < end; ++k) {
        const auto& d = data[order[k]];
        const auto lb = pipeline_step<float>(model.codec, model.nets, d.z_image, d.z_mask,
                                             d.residual, d.mask, true);
        if (!std::isfinite(lb.total))
          throw NonFiniteLoss("loss became non-finite at epoch " + std::to_string(epoch));
        acc.lm += lb.lm;
        acc.loc += lb.loc;
        acc.total += lb.total;
      }
      const double lr = nn::warmup_lr(cfg.learning_rate, opt.steps() + 1, warmup_steps);
      opt.step(lr, 1.0 / static_cast<double>(end - start));
      epoch_total += acc.total;
      if (callbacks.on_step) {
        const double inv = 1.0 / static_cast<double>(end - start);
        callbacks.on_step({epoch, opt.steps(), acc.lm * inv, acc.loc * inv, acc.total * inv, lr});
      }
    }
    const double mean = epoch_total / static_cast<double>(data.size());
    model.loss_history.push_back(mean);
    model.epoch = epoch;
    if (callbacks.on_epoch) callbacks.on_epoch(epoch, mean);
  }

  if (codec.content_hash() != hash_before || model.codec.content_hash() != hash_before)
    throw CodecHashMismatch("codec weights changed during training");
  return model;
}

Codec<float> codec_for(const TrainConfig& cfg, const Codec<float>& pretrained) {
  if (!cfg.ablation.no_codec_pretrain) return pretrained;
  CodecConfig c = pretrained.config();
  c.seed = Rng::derive(c.seed, 0xbad);
  Codec<float> fresh(c);
  fresh.freeze();
  return fresh;
}

EvalReport evaluate(const SdiflModel& model, const std::vector<Sample>& samples) {
  if (samples.empty()) throw EmptyInput("no evaluation samples");
  std::vector<MetricRecord> records;
  records.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    check_pair(s.image, s.mask);
    records.push_back(make_record(sample_id(s, i), "none", s.mask, binarize(model.infer(s.image))));
  }
  return make_report(config_hash(model.config), std::move(records));
}

void save_model(const SdiflModel& model, const std::filesystem::path& dir) {
  Checkpoint ckpt;
  ckpt.seed = model.config.seed;
  ckpt.config_hash = config_hash(model.config);
  add_tensors<float>(ckpt, model.nets.parameters());
  add_tensors<float>(ckpt, model.codec.parameters(), "codec.");
  const auto& mc = model.nets.config();
  json meta{{"kind", "model"},
            {"config", train_json(model.config)},
            {"codec", codec_json(model.codec.config())},
            {"codec_hash", model.codec_hash},
            {"grid_height", mc.grid_height},
            {"grid_width", mc.grid_width},
            {"epoch", model.epoch},
            {"loss_history", model.loss_history}};
  ckpt.meta_json = meta.dump();
  save_checkpoint(ckpt, dir);
}

SdiflModel load_model(const std::filesystem::path& dir) {
  const auto ckpt = load_checkpoint(dir);
  const json meta = parse_meta(ckpt, "model");
  try {
    SdiflModel model;
    model.config = train_from(meta.at("config"));
    model.codec_hash = meta.at("codec_hash").get<std::string>();
    model.codec = codec_from_checkpoint(ckpt, meta.at("codec"), model.codec_hash);
    const int gh = meta.at("grid_height").get<int>(), gw = meta.at("grid_width").get<int>();
    const int s = model.codec.factor();
    model.nets = MappingNets<float>(mapping_config(model.config, model.codec, gh * s, gw * s),
                                    model.config.ablation);
    restore_tensors<float>(ckpt, model.nets.parameters());
    model.epoch = meta.at("epoch").get<int>();
    model.loss_history = meta.at("loss_history").get<std::vector<double>>();
    if (config_hash(model.config) != ckpt.config_hash)
      throw SchemaError("checkpoint config hash does not match its config");
    return model;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model checkpoint metadata: ") + e.what());
  }
}

std::vector<AblationRow> run_ablation(const TrainConfig& base, const Codec<float>& pretrained,
                                      const std::vector<Sample>& train_set,
                                      const std::vector<Sample>& test_set,
                                      const std::vector<std::string>& variants,
                                      const std::function<void(const AblationRow&)>& on_row) {
  if (variants.empty()) throw UsageError("no ablation variants");
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    TrainConfig cfg = base;
    cfg.ablation = v == "full" ? Ablation{} : Ablation::from_names({v});
    const auto codec = codec_for(cfg, pretrained);
    const auto model = train(cfg, codec, train_set);
    const auto report = evaluate(model, test_set);
    const auto& row = report.summary.at("none");
    rows.push_back({v, row.f1, row.f1_complement_max, row.iou});
    if (on_row) on_row(rows.back());
  }
  return rows;
}

}  // namespace sdifl
