#include "sdifl/errors.hpp"
#include "sdifl/mapping.hpp"
#include "testing.hpp"

using namespace sdifl;
using sdifl::testing::numeric_grad;
using sdifl::testing::random_map;
using sdifl::testing::relative_error;

namespace {

constexpr double kTol = 1e-6;

double dot(const nn::Mat<double>& a, const nn::Mat<double>& b) {
  return (a.array() * b.array()).sum();
}

FlmmConfig small_flmm() {
  FlmmConfig f;
  f.patch = 4;
  f.dim = 8;
  f.depth = 2;
  f.heads = 2;
  f.mlp_ratio = 2;
  f.out_channels = 6;
  return f;
}

MappingConfig small_mapping() {
  MappingConfig mc;
  mc.latent_channels = 12;
  mc.grid_height = 2;
  mc.grid_width = 3;
  mc.lmm = {2, 5};
  mc.flmm = small_flmm();
  mc.seed = 4;
  return mc;
}

void randomize(nn::ParamRefs<double> params, Rng& rng, double scale = 0.3) {
  for (auto* p : params) nn::fill_normal(p->value, rng, scale);
}

}  // namespace

TEST(Lmm, ShapeAndIdentityInit) {
  Rng rng(1);
  Lmm<float> lmm(16, LmmConfig{}, rng);
  Rng data(2);
  const auto z = random_map<float>(data, 16, 16, 16);
  const auto y = lmm.forward(z);
  EXPECT_EQ(y.channels(), 16);
  EXPECT_EQ(y.height, 16);
  EXPECT_EQ(y.width, 16);
  EXPECT_EQ(y.data, z.data);
}

TEST(Lmm, AllZeroWeightsIsIdentity) {
  Rng rng(1);
  Lmm<double> lmm(8, LmmConfig{3, 6}, rng);
  for (auto* p : lmm.parameters()) p->value.setZero();
  Rng data(3);
  const auto z = random_map<double>(data, 8, 5, 5);
  EXPECT_EQ(lmm.forward(z).data, z.data);
}

TEST(Lmm, Gradients) {
  Rng rng(1);
  Lmm<double> lmm(6, LmmConfig{2, 4}, rng);
  randomize(lmm.parameters(), rng);
  auto z = random_map<double>(rng, 6, 4, 5);
  const auto r = random_map<double>(rng, 6, 4, 5);
  auto loss = [&] { return dot(lmm.forward(z).data, r.data); };
  LmmTape<double> tape;
  lmm.forward(z, &tape);
  for (auto* p : lmm.parameters()) p->zero_grad();
  const auto gz = lmm.backward(r, tape);
  EXPECT_LT(relative_error(gz.data, numeric_grad(z.data, loss)), kTol);
  for (auto* p : lmm.parameters())
    EXPECT_LT(relative_error(p->grad, numeric_grad(p->value, loss)), kTol) << p->name;
}

TEST(Lmm, RejectsWrongChannels) {
  Rng rng(1);
  Lmm<float> lmm(16, LmmConfig{}, rng);
  EXPECT_THROW(lmm.forward(nn::FeatureMap<float>(8, 4, 4)), ShapeError);
}

TEST(Flmm, TokenGridMatchesLatentGrid) {
  Rng rng(1);
  Flmm<float> flmm(FlmmConfig{}, 16, 16, rng);
  const auto z = flmm.forward(nn::FeatureMap<float>(3, 64, 64));
  EXPECT_EQ(z.channels(), 16);
  EXPECT_EQ(z.height, 16);
  EXPECT_EQ(z.width, 16);
  EXPECT_THROW(flmm.forward(nn::FeatureMap<float>(3, 62, 64)), ShapeError);
}

TEST(Flmm, ZeroResidualIgnoresPatchWeights) {
  Rng rng(1);
  Flmm<double> flmm(small_flmm(), 2, 3, rng);
  const nn::FeatureMap<double> zero(3, 8, 12);
  const auto before = flmm.forward(zero);
  Rng other(9);
  nn::fill_normal(flmm.parameters().front()->value, other, 1.0);
  ASSERT_NE(flmm.parameters().front()->name.find("embed.weight"), std::string::npos);
  EXPECT_LT((flmm.forward(zero).data - before.data).norm(), 1e-12);
}

TEST(Flmm, Gradients) {
  Rng rng(2);
  Flmm<double> flmm(small_flmm(), 2, 3, rng);
  randomize(flmm.parameters(), rng, 0.4);
  auto f = random_map<double>(rng, 3, 8, 12);
  const auto r = random_map<double>(rng, 6, 2, 3);
  auto loss = [&] { return dot(flmm.forward(f).data, r.data); };
  FlmmTape<double> tape;
  flmm.forward(f, &tape);
  for (auto* p : flmm.parameters()) p->zero_grad();
  flmm.backward(r, tape);
  for (auto* p : flmm.parameters())
    EXPECT_LT(relative_error(p->grad, numeric_grad(p->value, loss)), kTol) << p->name;
}

TEST(Flmm, OtherGridsInferOnly) {
  Rng rng(3);
  Flmm<double> flmm(small_flmm(), 2, 3, rng);
  Rng data(4);
  FlmmTape<double> tape;
  const auto z = flmm.forward(random_map<double>(data, 3, 12, 8), &tape);
  EXPECT_EQ(z.height, 3);
  EXPECT_EQ(z.width, 2);
  EXPECT_THROW(flmm.backward(nn::FeatureMap<double>(6, 3, 2), tape), ShapeError);
}

TEST(Flmm, TokensAreRowMajor) {
  // Moving a single patch moves only its own output cell when attention is
  // switched off (depth 0).
  FlmmConfig cfg = small_flmm();
  cfg.depth = 0;
  Rng rng(5);
  Flmm<double> flmm(cfg, 2, 3, rng);
  nn::FeatureMap<double> f(3, 8, 12);
  const auto base = flmm.forward(f);
  f.at(1, 5, 9) = 1.0;  // patch row 1, column 2 -> token 5
  const auto moved = flmm.forward(f);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x) {
      const double d = 0.0 + (moved.data.col(y * 3 + x) - base.data.col(y * 3 + x)).norm();
      if (y == 1 && x == 2) EXPECT_GT(d, 0.0);
      else EXPECT_EQ(d, 0.0);
    }
}

TEST(Fusion, ShapeZeroAndLinearity) {
  Rng rng(1);
  Fusion<double> fusion(16, 16, rng);
  randomize(fusion.parameters(), rng);
  Rng data(2);
  const auto a = random_map<double>(data, 16, 16, 16);
  const auto b = random_map<double>(data, 16, 16, 16);
  const auto c = random_map<double>(data, 16, 16, 16);
  const auto d = random_map<double>(data, 16, 16, 16);
  const nn::FeatureMap<double> zero(16, 16, 16);
  const auto y = fusion.forward(a, b);
  EXPECT_EQ(y.channels(), 16);
  EXPECT_EQ(y.height, 16);

  nn::FeatureMap<double> ac(a.data + c.data, 16, 16), bd(b.data + d.data, 16, 16);
  const auto lhs = fusion.forward(ac, bd).data;
  const nn::Mat<double> rhs = fusion.forward(a, b).data + fusion.forward(c, d).data - fusion.forward(zero, zero).data;
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);

  for (auto* p : fusion.parameters()) p->value.setZero();
  EXPECT_EQ(fusion.forward(a, b).data.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(fusion.forward(a, nn::FeatureMap<double>(16, 8, 8)), ShapeError);
}

TEST(Fusion, Gradients) {
  Rng rng(3);
  Fusion<double> fusion(12, 6, rng);
  randomize(fusion.parameters(), rng);
  auto a = random_map<double>(rng, 12, 3, 2);
  auto b = random_map<double>(rng, 6, 3, 2);
  const auto r = random_map<double>(rng, 12, 3, 2);
  auto loss = [&] { return dot(fusion.forward(a, b).data, r.data); };
  FusionTape<double> tape;
  fusion.forward(a, b, &tape);
  for (auto* p : fusion.parameters()) p->zero_grad();
  const auto [ga, gb] = fusion.backward(r, tape);
  EXPECT_LT(relative_error(ga.data, numeric_grad(a.data, loss)), kTol);
  EXPECT_LT(relative_error(gb.data, numeric_grad(b.data, loss)), kTol);
  for (auto* p : fusion.parameters())
    EXPECT_LT(relative_error(p->grad, numeric_grad(p->value, loss)), kTol);
}

TEST(Ablation, Names) {
  Ablation a;
  a.no_lmm = true;
  a.no_codec_pretrain = true;
  EXPECT_EQ(a.names(), (std::set<std::string>{"no_codec_pretrain", "no_lmm"}));
  EXPECT_EQ(Ablation::from_names(a.names()), a);
  EXPECT_EQ(Ablation::from_names({}), Ablation{});
  EXPECT_THROW(Ablation::from_names({"no_decoder"}), UsageError);
}

TEST(MappingNets, NoSrmFlmmIgnoresResidualAndFreezesFlmm) {
  Ablation ab;
  ab.no_srm_flmm = true;
  MappingNets<double> nets(small_mapping(), ab);
  Rng rng(5);
  randomize(nets.parameters(), rng, 0.3);
  const auto z = random_map<double>(rng, 12, 2, 3);
  const auto f1 = random_map<double>(rng, 3, 8, 12);
  const auto f2 = random_map<double>(rng, 3, 8, 12);
  EXPECT_EQ(nets.forward(z, f1).data, nets.forward(z, f2).data);

  MappingTape<double> tape;
  nets.forward(z, f1, &tape);
  for (auto* p : nets.parameters()) p->zero_grad();
  nets.backward(random_map<double>(rng, 12, 2, 3), tape);
  for (auto* p : nets.flmm().parameters()) EXPECT_EQ(p->grad.cwiseAbs().maxCoeff(), 0.0) << p->name;
  double lmm_grad = 0;
  for (auto* p : nets.lmm().parameters()) lmm_grad += p->grad.norm();
  EXPECT_GT(lmm_grad, 0.0);
}

TEST(MappingNets, NoVaeLmmIgnoresImageLatent) {
  Ablation ab;
  ab.no_vae_lmm = true;
  MappingNets<double> nets(small_mapping(), ab);
  Rng rng(6);
  randomize(nets.parameters(), rng, 0.3);
  const auto f = random_map<double>(rng, 3, 8, 12);
  EXPECT_EQ(nets.forward(random_map<double>(rng, 12, 2, 3), f).data,
            nets.forward(random_map<double>(rng, 12, 2, 3), f).data);
}

TEST(MappingNets, NoLmmPassesImageLatentThrough) {
  Ablation ab;
  ab.no_lmm = true;
  MappingNets<double> nets(small_mapping(), ab);
  Rng rng(7);
  randomize(nets.parameters(), rng, 0.3);
  const auto z = random_map<double>(rng, 12, 2, 3);
  const auto f = random_map<double>(rng, 3, 8, 12);
  const auto expected = nets.fusion().forward(z, nets.flmm().forward(f));
  EXPECT_LT((nets.forward(z, f).data - expected.data).norm(), 1e-12);
}

TEST(MappingNets, RejectsEmptyWiring) {
  Ablation ab;
  ab.no_srm_flmm = true;
  ab.no_vae_lmm = true;
  EXPECT_THROW(MappingNets<double>(small_mapping(), ab), UsageError);
}

TEST(MappingNets, ParameterOrderAndGradients) {
  MappingNets<double> nets(small_mapping(), Ablation{});
  const auto params = nets.parameters();
  ASSERT_FALSE(params.empty());
  EXPECT_EQ(params.front()->name.rfind("lmm.", 0), 0u);
  EXPECT_EQ(params.back()->name.rfind("fusion.", 0), 0u);
  std::set<std::string> names;
  for (auto* p : params) EXPECT_TRUE(names.insert(p->name).second) << p->name;

  Rng rng(8);
  randomize(nets.parameters(), rng, 0.3);
  auto z = random_map<double>(rng, 12, 2, 3);
  const auto f = random_map<double>(rng, 3, 8, 12);
  const auto r = random_map<double>(rng, 12, 2, 3);
  auto loss = [&] { return dot(nets.forward(z, f).data, r.data); };
  MappingTape<double> tape;
  nets.forward(z, f, &tape);
  for (auto* p : params) p->zero_grad();
  nets.backward(r, tape);
  for (auto* p : params)
    EXPECT_LT(relative_error(p->grad, numeric_grad(p->value, loss)), kTol) << p->name;
}
