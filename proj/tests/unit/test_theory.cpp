#include <cmath>
#include <numbers>

#include "sdifl/errors.hpp"
#include "sdifl/theory.hpp"
#include "testing.hpp"

using namespace sdifl;
using namespace sdifl::theory;

namespace {

std::vector<double> random_plane(Rng& rng, int rows, int cols) {
  std::vector<double> p(static_cast<std::size_t>(rows) * cols);
  for (auto& v : p) v = rng.uniform();
  return p;
}

// Direct O(N^2) sum, written independently of dft2.
Complex naive_bin(const std::vector<double>& x, int rows, int cols, int u, int v) {
  Complex acc = 0.0;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const double angle = -2.0 * std::numbers::pi * (double(u) * i / rows + double(v) * j / cols);
      acc += x[static_cast<std::size_t>(i) * cols + j] * std::polar(1.0, angle);
    }
  return acc;
}

// I(A;B) = H(A) + H(B) - H(A,B), each entropy summed straight from the table.
double mi_by_entropies(const ToyJoint& j, const std::vector<int>& a, const std::vector<int>& b) {
  auto h = [&](const std::vector<int>& vars) {
    std::map<std::vector<int>, double> mass;
    std::vector<int> idx(j.dims.size(), 0);
    for (std::size_t flat = 0; flat < j.p.size(); ++flat) {
      std::size_t rest = flat;
      for (int d = static_cast<int>(j.dims.size()) - 1; d >= 0; --d) {
        idx[d] = static_cast<int>(rest % j.dims[d]);
        rest /= j.dims[d];
      }
      std::vector<int> key;
      for (int v : vars) key.push_back(idx[v]);
      mass[key] += j.p[flat];
    }
    double out = 0;
    for (const auto& [k, p] : mass)
      if (p > 0) out -= p * std::log2(p);
    return out;
  };
  std::vector<int> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  return h(a) + h(b) - h(ab);
}

}  // namespace

TEST(Dft, RoundTrip) {
  Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    const int rows = 4 + t, cols = 16 - t;
    const auto x = random_plane(rng, rows, cols);
    const auto back = idft2(dft2(x, rows, cols));
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_NEAR(back[i].real(), x[i], 1e-10);
      EXPECT_NEAR(back[i].imag(), 0.0, 1e-10);
    }
  }
}

TEST(Dft, MatchesDirectSum) {
  Rng rng(2);
  const auto x = random_plane(rng, 6, 10);
  const auto X = dft2(x, 6, 10);
  for (int u = 0; u < 6; ++u)
    for (int v = 0; v < 10; ++v) EXPECT_LT(std::abs(X.at(u, v) - naive_bin(x, 6, 10, u, v)), 1e-10);
}

TEST(Dft, CosineAndDc) {
  std::vector<double> x(16 * 16);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) x[i * 16 + j] = std::cos(2.0 * std::numbers::pi * 2 * j / 16);
  const auto X = dft2(x, 16, 16);
  for (int u = 0; u < 16; ++u)
    for (int v = 0; v < 16; ++v) {
      const double expected = u == 0 && (v == 2 || v == 14) ? 128.0 : 0.0;
      EXPECT_NEAR(std::abs(X.at(u, v)), expected, 1e-9) << u << "," << v;
    }

  Rng rng(3);
  const auto y = random_plane(rng, 8, 8);
  double sum = 0;
  for (double v : y) sum += v;
  EXPECT_NEAR(dft2(y, 8, 8).at(0, 0).real(), sum, 1e-12);
}

TEST(SpectralFold, IdentityAtFactorOne) {
  Rng rng(4);
  const auto x = random_plane(rng, 8, 12);
  const auto X = dft2(x, 8, 12);
  const auto folded = spectral_fold_predict(X, 1);
  for (std::size_t i = 0; i < X.bins.size(); ++i) EXPECT_LT(std::abs(folded.bins[i] - X.bins[i]), 1e-12);
  EXPECT_EQ(decimate(x, 8, 12, 1), x);
}

TEST(SpectralFold, MatchesDecimatedSpectrum) {
  Rng rng(5);
  for (int s : {2, 4}) {
    for (int t = 0; t < 5; ++t) {
      const auto x = random_plane(rng, 16, 16);
      EXPECT_LE(spectral_fold_check(x, 16, 16, s), 1e-10);
      // Independent route: direct sums on both sides.
      const int r = 16 / s;
      const auto d = decimate(x, 16, 16, s);
      ASSERT_EQ(d.size(), static_cast<std::size_t>(r * r));
      EXPECT_EQ(d[1], x[static_cast<std::size_t>(s)]);
      for (int u = 0; u < r; ++u)
        for (int v = 0; v < r; ++v) {
          Complex predicted = 0.0;
          for (int k1 = 0; k1 < s; ++k1)
            for (int k2 = 0; k2 < s; ++k2) predicted += naive_bin(x, 16, 16, u + k1 * r, v + k2 * r);
          predicted /= double(s * s);
          EXPECT_LT(std::abs(predicted - naive_bin(d, r, r, u, v)), 1e-9);
        }
    }
  }
  EXPECT_LE(spectral_fold_check(random_plane(rng, 12, 8), 12, 8, 4), 1e-10);
}

TEST(SpectralFold, RejectsNonDivisor) {
  Rng rng(6);
  const auto x = random_plane(rng, 10, 10);
  EXPECT_THROW(spectral_fold_check(x, 10, 10, 4), DivisibilityError);
  EXPECT_THROW(spectral_fold_predict(dft2(x, 10, 10), 3), DivisibilityError);
}

TEST(MutualInformation, HandExamples) {
  ToyJoint independent{{2, 2}, {0.25, 0.25, 0.25, 0.25}};
  EXPECT_NEAR(mutual_information(independent, {0}, {1}), 0.0, 1e-15);
  ToyJoint copy{{2, 2}, {0.5, 0.0, 0.0, 0.5}};
  EXPECT_NEAR(mutual_information(copy, {0}, {1}), 1.0, 1e-15);
  EXPECT_NEAR(entropy_bits(copy), 1.0, 1e-15);
  EXPECT_NEAR(entropy_bits(independent), 2.0, 1e-15);
  ToyJoint bad{{2}, {0.7, 0.7}};
  EXPECT_THROW(bad.validate(), InvalidDistribution);
  ToyJoint negative{{2}, {1.5, -0.5}};
  EXPECT_THROW(negative.validate(), InvalidDistribution);
}

TEST(MutualInformation, XorGainIsOneBit) {
  const auto g = mi_gain(xor_joint());
  EXPECT_NEAR(g.i_z, 0.0, 1e-15);
  EXPECT_NEAR(g.i_zf, 1.0, 1e-15);
}

TEST(MutualInformation, IrrelevantResidualAddsNothing) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto j = random_irrelevant_joint(seed);
    j.validate();
    EXPECT_NEAR(mi_gain(j).gain(), 0.0, 1e-12) << seed;
  }
}

TEST(MutualInformation, GainNonNegativeAndMatchesEntropies) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto j = random_residual_joint(seed);
    j.validate();
    const auto g = mi_gain(j);
    EXPECT_GE(g.gain(), -1e-12) << seed;
    EXPECT_NEAR(g.i_z, mi_by_entropies(j, {0}, {2}), 1e-12);
    EXPECT_NEAR(g.i_zf, mi_by_entropies(j, {0, 1}, {2}), 1e-12);
  }
}

TEST(Marginal, SumsOut) {
  const auto j = xor_joint();
  const auto zm = marginal(j, {0, 2});
  ASSERT_EQ(zm.p.size(), 4u);
  for (double v : zm.p) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(Elbo, HandCase) {
  ToyLatentModel m;
  m.prior = {0.5, 0.5};
  m.likelihood = {{0.9, 0.1}, {0.2, 0.8}};
  m.q = {{0.5, 0.5}, {0.5, 0.5}};
  m.validate();
  EXPECT_NEAR(evidence(m, 0), std::log(0.55), 1e-15);
  // q equals the prior, so the KL term vanishes.
  EXPECT_NEAR(elbo(m, 0), 0.5 * std::log(0.9) + 0.5 * std::log(0.2), 1e-15);
  const auto post = posterior(m, 0);
  EXPECT_NEAR(post[0], 0.45 / 0.55, 1e-15);
  EXPECT_NEAR(kl_divergence({0.5, 0.5}, {0.5, 0.5}), 0.0, 1e-15);
  m.q = {{1.2, -0.2}, {0.5, 0.5}};
  EXPECT_THROW(m.validate(), InvalidDistribution);
}

TEST(Elbo, BoundAndDecomposition) {
  Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    auto model = random_latent_model(rng, 2 + t % 4, 2 + t % 3);
    model.validate();
    for (int m = 0; m < model.observed_states(); ++m) {
      const double ev = evidence(model, m), lb = elbo(model, m);
      EXPECT_LE(lb, ev + 1e-12);
      EXPECT_NEAR(ev - lb, kl_divergence(model.q[m], posterior(model, m)), 1e-10);
    }
    set_exact_posterior(model);
    for (int m = 0; m < model.observed_states(); ++m)
      EXPECT_NEAR(elbo(model, m), evidence(model, m), 1e-10);
  }
}

TEST(TheorySuite, Summary) {
  const auto r = run_theory_suite();
  EXPECT_EQ(r.fold_cases.size(), 100u);
  EXPECT_EQ(r.mi_cases.size(), 100u);
  EXPECT_EQ(r.jensen_gaps.size(), 1000u);
  EXPECT_LE(r.fold_max_err, 1e-10);
  EXPECT_GE(r.mi_gain_min, -1e-12);
  EXPECT_GE(r.jensen_gap_min, -1e-12);
  EXPECT_LE(r.jensen_posterior_max_gap, 1e-10);
  EXPECT_LE(r.decomposition_max_err, 1e-10);
  EXPECT_NEAR(r.xor_gain, 1.0, 1e-12);
  EXPECT_EQ(theory_report_json(r), theory_report_json(run_theory_suite()));
}
