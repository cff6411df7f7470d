#include "sdifl/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "json.hpp"
#include "sdifl/errors.hpp"

namespace sdifl::theory {
namespace {

// e^{-2 pi i k / n} with k reduced mod n first, so large index products do
// not lose phase precision.
std::vector<Complex> twiddles(int n, double sign) {
  std::vector<Complex> w(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    w[static_cast<std::size_t>(k)] = std::polar(1.0, sign * 2.0 * std::numbers::pi * k / n);
  }
  return w;
}

// Separable transform of a rows x cols complex grid.
std::vector<Complex> transform(const std::vector<Complex>& in, int rows, int cols, double sign) {
  const auto wr = twiddles(rows, sign);
  const auto wc = twiddles(cols, sign);
  std::vector<Complex> tmp(in.size()), out(in.size());
  for (int i = 0; i < rows; ++i)
    for (int v = 0; v < cols; ++v) {
      Complex acc = 0.0;
      for (int j = 0; j < cols; ++j) acc += in[static_cast<std::size_t>(i) * cols + j] * wc[static_cast<std::size_t>((v * j) % cols)];
      tmp[static_cast<std::size_t>(i) * cols + v] = acc;
    }
  for (int u = 0; u < rows; ++u)
    for (int v = 0; v < cols; ++v) {
      Complex acc = 0.0;
      for (int i = 0; i < rows; ++i) acc += tmp[static_cast<std::size_t>(i) * cols + v] * wr[static_cast<std::size_t>((u * i) % rows)];
      out[static_cast<std::size_t>(u) * cols + v] = acc;
    }
  return out;
}

std::vector<int> strides_of(const std::vector<int>& dims) {
  std::vector<int> s(dims.size(), 1);
  for (std::size_t i = dims.size(); i-- > 1;) s[i - 1] = s[i] * dims[i];
  return s;
}

double plogp_ratio(double p, double q) { return p > 0.0 ? p * std::log2(p / q) : 0.0; }

std::vector<double> normalized(std::vector<double> v) {
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (auto& x : v) x /= s;
  return v;
}

std::vector<double> random_simplex(Rng& rng, int n, double floor = 1e-3) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = floor + rng.uniform();
  return normalized(std::move(v));
}

}  // namespace

SpectrumGrid dft2(const std::vector<double>& plane, int rows, int cols) {
  std::vector<Complex> in(plane.begin(), plane.end());
  return {rows, cols, transform(in, rows, cols, -1.0)};
}

std::vector<Complex> idft2(const SpectrumGrid& spectrum) {
  auto out = transform(spectrum.bins, spectrum.rows, spectrum.cols, 1.0);
  const double n = static_cast<double>(spectrum.rows) * spectrum.cols;
  for (auto& v : out) v /= n;
  return out;
}

std::vector<double> decimate(const std::vector<double>& plane, int rows, int cols, int s) {
  if (s < 1 || rows % s || cols % s) throw DivisibilityError("decimation factor must divide the grid");
  const int r = rows / s, c = cols / s;
  std::vector<double> out(static_cast<std::size_t>(r) * c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      out[static_cast<std::size_t>(i) * c + j] = plane[static_cast<std::size_t>(i * s) * cols + j * s];
  return out;
}

SpectrumGrid spectral_fold_predict(const SpectrumGrid& spectrum, int s) {
  if (s < 1 || spectrum.rows % s || spectrum.cols % s) {
    throw DivisibilityError("folding factor " + std::to_string(s) + " does not divide " +
                            std::to_string(spectrum.rows) + "x" + std::to_string(spectrum.cols));
  }
  const int r = spectrum.rows / s, c = spectrum.cols / s;
  SpectrumGrid out{r, c, std::vector<Complex>(static_cast<std::size_t>(r) * c)};
  const double scale = 1.0 / (static_cast<double>(s) * s);
  for (int u = 0; u < r; ++u)
    for (int v = 0; v < c; ++v) {
      Complex acc = 0.0;
      for (int k1 = 0; k1 < s; ++k1)
        for (int k2 = 0; k2 < s; ++k2) acc += spectrum.at(u + k1 * r, v + k2 * c);
      out.at(u, v) = acc * scale;
    }
  return out;
}

double spectral_fold_check(const std::vector<double>& plane, int rows, int cols, int s) {
  const SpectrumGrid predicted = spectral_fold_predict(dft2(plane, rows, cols), s);
  const SpectrumGrid direct = dft2(decimate(plane, rows, cols, s), rows / s, cols / s);
  double err = 0.0;
  for (std::size_t i = 0; i < direct.bins.size(); ++i) {
    err = std::max(err, std::abs(predicted.bins[i] - direct.bins[i]));
  }
  return err;
}

void ToyJoint::validate() const {
  std::size_t n = 1;
  for (int d : dims) {
    if (d < 1) throw InvalidDistribution("variable with empty support");
    n *= static_cast<std::size_t>(d);
  }
  if (n != p.size()) throw InvalidDistribution("table size does not match dims");
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidDistribution("negative or non-finite mass");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidDistribution("mass does not sum to 1");
}

ToyJoint marginal(const ToyJoint& joint, const std::vector<int>& vars) {
  for (int v : vars) {
    if (v < 0 || v >= static_cast<int>(joint.dims.size())) throw InvalidDistribution("variable index out of range");
  }
  ToyJoint out;
  for (int v : vars) out.dims.push_back(joint.dims[static_cast<std::size_t>(v)]);
  std::size_t n = 1;
  for (int d : out.dims) n *= static_cast<std::size_t>(d);
  out.p.assign(n, 0.0);
  const auto in_strides = strides_of(joint.dims);
  const auto out_strides = strides_of(out.dims);
  for (std::size_t flat = 0; flat < joint.p.size(); ++flat) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < vars.size(); ++k) {
      const int v = vars[k];
      const int coord = static_cast<int>(flat / static_cast<std::size_t>(in_strides[static_cast<std::size_t>(v)])) %
                        joint.dims[static_cast<std::size_t>(v)];
      idx += static_cast<std::size_t>(coord) * static_cast<std::size_t>(out_strides[k]);
    }
    out.p[idx] += joint.p[flat];
  }
  return out;
}

double entropy_bits(const ToyJoint& joint) {
  double h = 0.0;
  for (double v : joint.p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

double mutual_information(const ToyJoint& joint, const std::vector<int>& vars_a,
                          const std::vector<int>& vars_b) {
  joint.validate();
  for (int a : vars_a)
    if (std::find(vars_b.begin(), vars_b.end(), a) != vars_b.end()) {
      throw InvalidDistribution("mutual information needs disjoint variable sets");
    }
  std::vector<int> both = vars_a;
  both.insert(both.end(), vars_b.begin(), vars_b.end());
  const ToyJoint ab = marginal(joint, both);
  const ToyJoint a = marginal(joint, vars_a);
  const ToyJoint b = marginal(joint, vars_b);
  const std::size_t nb = b.p.size();
  double mi = 0.0;
  for (std::size_t i = 0; i < a.p.size(); ++i)
    for (std::size_t j = 0; j < nb; ++j) mi += plogp_ratio(ab.p[i * nb + j], a.p[i] * b.p[j]);
  return mi;
}

ToyJoint xor_joint() {
  ToyJoint j{{2, 2, 2}, std::vector<double>(8, 0.0)};
  for (int z = 0; z < 2; ++z)
    for (int f = 0; f < 2; ++f) j.p[static_cast<std::size_t>((z * 2 + f) * 2 + (z ^ f))] = 0.25;
  return j;
}

MiGain mi_gain(const ToyJoint& zfm) {
  return {mutual_information(zfm, {0}, {2}), mutual_information(zfm, {0, 1}, {2})};
}

ToyJoint random_residual_joint(std::uint64_t seed) {
  Rng rng(Rng::derive(seed, 0x5e1));
  const int nd = rng.integer(2, 4), nz = rng.integer(2, 4), nm = 2, nf = rng.integer(2, 4);
  // p(D, Z, M), skewed weights so some joints are far from uniform.
  std::vector<double> w(static_cast<std::size_t>(nd * nz * nm));
  for (auto& x : w) {
    const double u = rng.uniform();
    x = u * u * u + 1e-4;
  }
  w = normalized(std::move(w));
  std::vector<int> f_of(static_cast<std::size_t>(nd * nm));
  for (auto& f : f_of) f = rng.integer(0, nf - 1);
  ToyJoint out{{nz, nf, nm}, std::vector<double>(static_cast<std::size_t>(nz * nf * nm), 0.0)};
  for (int d = 0; d < nd; ++d)
    for (int z = 0; z < nz; ++z)
      for (int m = 0; m < nm; ++m) {
        const int f = f_of[static_cast<std::size_t>(d * nm + m)];
        out.p[static_cast<std::size_t>((z * nf + f) * nm + m)] += w[static_cast<std::size_t>((d * nz + z) * nm + m)];
      }
  return out;
}

ToyJoint random_irrelevant_joint(std::uint64_t seed) {
  Rng rng(Rng::derive(seed, 0x1e7));
  const int nz = rng.integer(2, 4), nf = rng.integer(2, 4), nm = 2;
  const auto zm = random_simplex(rng, nz * nm);
  const auto f = random_simplex(rng, nf);
  ToyJoint out{{nz, nf, nm}, std::vector<double>(static_cast<std::size_t>(nz * nf * nm), 0.0)};
  for (int z = 0; z < nz; ++z)
    for (int fi = 0; fi < nf; ++fi)
      for (int m = 0; m < nm; ++m)
        out.p[static_cast<std::size_t>((z * nf + fi) * nm + m)] =
            zm[static_cast<std::size_t>(z * nm + m)] * f[static_cast<std::size_t>(fi)];
  return out;
}

MiGain mi_gain_experiment(std::uint64_t seed) { return mi_gain(random_residual_joint(seed)); }

void ToyLatentModel::validate() const {
  auto check = [](const std::vector<double>& row) {
    double s = 0.0;
    for (double v : row) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidDistribution("negative or non-finite probability");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw InvalidDistribution("row does not sum to 1");
  };
  if (prior.empty() || likelihood.size() != prior.size()) throw InvalidDistribution("likelihood rows must match prior");
  check(prior);
  for (const auto& r : likelihood) {
    if (r.size() != likelihood[0].size()) throw InvalidDistribution("ragged likelihood");
    check(r);
  }
  if (q.size() != likelihood[0].size()) throw InvalidDistribution("q needs one row per observation");
  for (const auto& r : q) {
    if (r.size() != prior.size()) throw InvalidDistribution("q row size must match prior");
    check(r);
  }
}

double evidence(const ToyLatentModel& model, int m) {
  model.validate();
  double s = 0.0;
  for (int z = 0; z < model.latent_states(); ++z) {
    s += model.prior[static_cast<std::size_t>(z)] * model.likelihood[static_cast<std::size_t>(z)][static_cast<std::size_t>(m)];
  }
  return std::log(s);
}

std::vector<double> posterior(const ToyLatentModel& model, int m) {
  std::vector<double> post(model.prior.size());
  for (std::size_t z = 0; z < post.size(); ++z) post[z] = model.prior[z] * model.likelihood[z][static_cast<std::size_t>(m)];
  return normalized(std::move(post));
}

double kl_divergence(const std::vector<double>& q, const std::vector<double>& p) {
  double kl = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (q[i] > 0.0) kl += q[i] * std::log(q[i] / p[i]);
  return kl;
}

double elbo(const ToyLatentModel& model, int m) {
  model.validate();
  const auto& q = model.q[static_cast<std::size_t>(m)];
  double recon = 0.0;
  for (std::size_t z = 0; z < q.size(); ++z) {
    if (q[z] > 0.0) recon += q[z] * std::log(model.likelihood[z][static_cast<std::size_t>(m)]);
  }
  return recon - kl_divergence(q, model.prior);
}

ToyLatentModel random_latent_model(Rng& rng, int latent_states, int observed_states) {
  ToyLatentModel model;
  model.prior = random_simplex(rng, latent_states);
  for (int z = 0; z < latent_states; ++z) model.likelihood.push_back(random_simplex(rng, observed_states));
  for (int m = 0; m < observed_states; ++m) model.q.push_back(random_simplex(rng, latent_states));
  return model;
}

void set_exact_posterior(ToyLatentModel& model) {
  for (int m = 0; m < model.observed_states(); ++m) model.q[static_cast<std::size_t>(m)] = posterior(model, m);
}

TheoryReport run_theory_suite(const TheoryOptions& options) {
  TheoryReport report;
  Rng rng(options.seed);
  const int n = options.fold_size;
  for (int img = 0; img < options.fold_images; ++img) {
    std::vector<double> plane(static_cast<std::size_t>(n) * n);
    for (auto& v : plane) v = rng.uniform();
    for (int s : options.fold_factors) {
      const double err = spectral_fold_check(plane, n, n, s);
      report.fold_cases.push_back({img, s, err});
      report.fold_max_err = std::max(report.fold_max_err, err);
    }
  }

  report.mi_gain_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < options.mi_joints; ++i) {
    const MiGain g = mi_gain_experiment(Rng::derive(options.seed, static_cast<std::uint64_t>(i)));
    report.mi_cases.push_back(g);
    report.mi_gain_min = std::min(report.mi_gain_min, g.gain());
  }
  report.xor_gain = mi_gain(xor_joint()).gain();

  report.jensen_gap_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < options.elbo_models; ++i) {
    ToyLatentModel model = random_latent_model(rng, rng.integer(2, 5), rng.integer(2, 5));
    const int m = rng.integer(0, model.observed_states() - 1);
    const double ev = evidence(model, m);
    const double gap = ev - elbo(model, m);
    report.jensen_gaps.push_back(gap);
    report.jensen_gap_min = std::min(report.jensen_gap_min, gap);
    report.decomposition_max_err = std::max(
        report.decomposition_max_err,
        std::abs(gap - kl_divergence(model.q[static_cast<std::size_t>(m)], posterior(model, m))));
    set_exact_posterior(model);
    report.jensen_posterior_max_gap = std::max(report.jensen_posterior_max_gap, std::abs(ev - elbo(model, m)));
  }
  return report;
}

std::string theory_report_json(const TheoryReport& report) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["fold_max_err"] = report.fold_max_err;
  j["mi_gain_min"] = report.mi_gain_min;
  j["jensen_gap_min"] = report.jensen_gap_min;
  j["jensen_posterior_max_gap"] = report.jensen_posterior_max_gap;
  j["decomposition_max_err"] = report.decomposition_max_err;
  j["xor_gain_bits"] = report.xor_gain;
  ordered_json folds = ordered_json::array();
  for (const auto& c : report.fold_cases) folds.push_back({{"image", c.image}, {"s", c.factor}, {"max_err", c.max_err}});
  ordered_json mi = ordered_json::array();
  for (const auto& g : report.mi_cases) mi.push_back({{"i_z", g.i_z}, {"i_zf", g.i_zf}, {"gain", g.gain()}});
  j["fold_cases"] = std::move(folds);
  j["mi_cases"] = std::move(mi);
  j["jensen_gaps"] = report.jensen_gaps;
  return j.dump(2) + "\n";
}

}  // namespace sdifl::theory
