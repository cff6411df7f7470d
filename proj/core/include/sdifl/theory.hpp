#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "sdifl/rng.hpp"

namespace sdifl::theory {

using Complex = std::complex<double>;

// Unnormalized 2-D DFT coefficients X[u, v] = sum x[i, j] e^{-2 pi i (ui/R + vj/C)}.
struct SpectrumGrid {
  int rows = 0;
  int cols = 0;
  std::vector<Complex> bins;

  Complex& at(int u, int v) { return bins[static_cast<std::size_t>(u) * cols + v]; }
  const Complex& at(int u, int v) const { return bins[static_cast<std::size_t>(u) * cols + v]; }
};

SpectrumGrid dft2(const std::vector<double>& plane, int rows, int cols);
// Inverse of dft2; returns the complex signal (imaginary parts ~0 for real input).
std::vector<Complex> idft2(const SpectrumGrid& spectrum);

// x[s*i, s*j]
std::vector<double> decimate(const std::vector<double>& plane, int rows, int cols, int s);

// Folded spectrum of the s-decimated signal predicted from the original:
// Z[u, v] = (1/s^2) sum_{k1,k2} X[u + k1 R/s, v + k2 C/s].
// Throws DivisibilityError unless s divides both sides.
SpectrumGrid spectral_fold_predict(const SpectrumGrid& spectrum, int s);

// max |spectral_fold_predict(DFT(x), s) - DFT(decimate(x, s))|
double spectral_fold_check(const std::vector<double>& plane, int rows, int cols, int s);

// Finite joint distribution over discrete variables, row-major over `dims`.
struct ToyJoint {
  std::vector<int> dims;
  std::vector<double> p;

  // Throws InvalidDistribution on negative mass or total != 1 (1e-9).
  void validate() const;
  std::size_t size() const { return p.size(); }
};

// Marginal over the listed variables (in that order).
ToyJoint marginal(const ToyJoint& joint, const std::vector<int>& vars);

// Shannon entropy in bits; 0 log 0 := 0.
double entropy_bits(const ToyJoint& joint);

// I(A; B) in bits via plug-in sum p log2(p / (p_a p_b)).
double mutual_information(const ToyJoint& joint, const std::vector<int>& vars_a,
                          const std::vector<int>& vars_b);

// Z, F independent uniform bits and M = Z xor F; variable order (Z, F, M).
ToyJoint xor_joint();

struct MiGain {
  double i_z = 0.0;   // I(Z; M)
  double i_zf = 0.0;  // I(Z, F; M)
  double gain() const { return i_zf - i_z; }
};

// Variable order (Z, F, M).
MiGain mi_gain(const ToyJoint& zfm);

// Seeded random joint p(D, Z, M) with hidden detail D; the residual F is a
// random deterministic function of (D, M). Returns the (Z, F, M) joint.
ToyJoint random_residual_joint(std::uint64_t seed);

// Same as random_residual_joint but F drawn independently of (Z, M).
ToyJoint random_irrelevant_joint(std::uint64_t seed);

MiGain mi_gain_experiment(std::uint64_t seed);

// Finite latent model: prior p(z), likelihood p(m | z) (row z), variational
// q(z | m) (row m).
struct ToyLatentModel {
  std::vector<double> prior;                   // K
  std::vector<std::vector<double>> likelihood;  // K x V
  std::vector<std::vector<double>> q;           // V x K

  int latent_states() const { return static_cast<int>(prior.size()); }
  int observed_states() const { return likelihood.empty() ? 0 : static_cast<int>(likelihood[0].size()); }
  void validate() const;  // throws InvalidDistribution
};

// E_q[log p(m|z)] - KL(q(z|m) || p(z)), natural log, exact sums.
double elbo(const ToyLatentModel& model, int m);
// log sum_z p(z) p(m|z)
double evidence(const ToyLatentModel& model, int m);
std::vector<double> posterior(const ToyLatentModel& model, int m);
double kl_divergence(const std::vector<double>& q, const std::vector<double>& p);

// Strictly positive random tables (K latent states, V observations).
ToyLatentModel random_latent_model(Rng& rng, int latent_states, int observed_states);
// Replaces q with the exact posterior for every m.
void set_exact_posterior(ToyLatentModel& model);

struct TheoryReport {
  double fold_max_err = 0.0;
  double mi_gain_min = 0.0;
  double jensen_gap_min = 0.0;
  double jensen_posterior_max_gap = 0.0;  // |evidence - elbo| with q = posterior
  double decomposition_max_err = 0.0;     // |evidence - elbo - KL(q || posterior)|
  double xor_gain = 0.0;
  struct FoldCase {
    int image = 0;
    int factor = 0;
    double max_err = 0.0;
  };
  std::vector<FoldCase> fold_cases;
  std::vector<MiGain> mi_cases;
  std::vector<double> jensen_gaps;
};

struct TheoryOptions {
  std::uint64_t seed = 2024;
  int fold_images = 50;
  int fold_size = 16;
  std::vector<int> fold_factors{2, 4};
  int mi_joints = 100;
  int elbo_models = 1000;
};

TheoryReport run_theory_suite(const TheoryOptions& options = {});
std::string theory_report_json(const TheoryReport& report);

}  // namespace sdifl::theory
