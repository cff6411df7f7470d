#include "sdifl/codec.hpp"
#include "sdifl/mapping.hpp"
#include "sdifl/srm.hpp"
#include "sdifl/train.hpp"
#include "testing.hpp"

using namespace sdifl;
using sdifl::testing::numeric_grad;
using sdifl::testing::relative_error;

namespace {

struct Instance {
  Codec<double> codec{CodecConfig{4, 12, 8, 3}};
  MappingNets<double> nets;
  nn::FeatureMap<double> z_image, z_mask, residual;
  std::vector<double> mask;
};

Instance make_instance(const Ablation& ablation, std::uint64_t seed) {
  Instance in;
  MappingConfig mc;
  mc.latent_channels = 12;
  mc.grid_height = 2;
  mc.grid_width = 2;
  mc.lmm = {1, 6};
  mc.flmm = {4, 8, 1, 2, 2, 6};
  mc.seed = seed;
  in.nets = MappingNets<double>(mc, ablation);
  Rng rng(seed);
  for (auto* p : in.nets.parameters()) nn::fill_normal(p->value, rng, 0.3);

  ImageTensor img(8, 8);
  for (auto& v : img.data) v = rng.uniform();
  MaskTensor m(8, 8);
  for (auto& v : m.data) v = rng.bernoulli(0.4);
  in.codec.freeze();
  in.z_image = in.codec.encode(img);
  in.z_mask = in.codec.encode_mask(m);
  in.residual = to_feature_map<double>(extract_residuals(img));
  in.mask.assign(m.data.begin(), m.data.end());
  return in;
}

double loss(Instance& in) {
  return pipeline_step<double>(in.codec, in.nets, in.z_image, in.z_mask, in.residual, in.mask, false)
      .total;
}

}  // namespace

TEST(Pipeline, FullGradientMatchesFiniteDifferences) {
  auto in = make_instance(Ablation{}, 11);
  const auto codec_hash = in.codec.content_hash();
  for (auto* p : in.nets.parameters()) p->zero_grad();
  const auto lb =
      pipeline_step<double>(in.codec, in.nets, in.z_image, in.z_mask, in.residual, in.mask, true);
  EXPECT_NEAR(lb.total, lb.lm + lb.loc, 1e-15);
  EXPECT_GT(lb.lm, 0.0);
  EXPECT_GT(lb.loc, 0.0);
  auto f = [&] { return loss(in); };
  for (auto* p : in.nets.parameters()) {
    const double err = relative_error(p->grad, numeric_grad(p->value, f));
    EXPECT_LE(err, 1e-4) << p->name;
  }
  EXPECT_EQ(in.codec.content_hash(), codec_hash);
  for (const auto* p : std::as_const(in.codec).parameters()) EXPECT_EQ(p->grad.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Pipeline, AblatedGradientsMatchFiniteDifferences) {
  for (const char* name : {"no_srm_flmm", "no_vae_lmm", "no_lmm"}) {
    auto in = make_instance(Ablation::from_names({name}), 12);
    for (auto* p : in.nets.parameters()) p->zero_grad();
    pipeline_step<double>(in.codec, in.nets, in.z_image, in.z_mask, in.residual, in.mask, true);
    auto f = [&] { return loss(in); };
    for (auto* p : in.nets.parameters())
      EXPECT_LE(relative_error(p->grad, numeric_grad(p->value, f)), 1e-4) << name << " " << p->name;
  }
}

TEST(Pipeline, ForwardOnlyLeavesGradientsAlone) {
  auto in = make_instance(Ablation{}, 13);
  for (auto* p : in.nets.parameters()) p->zero_grad();
  loss(in);
  for (auto* p : in.nets.parameters()) EXPECT_EQ(p->grad.cwiseAbs().maxCoeff(), 0.0);
}
