#include "sdifl/objective.hpp"

#include <string>

#include "sdifl/errors.hpp"

namespace sdifl {
namespace {

template <class A, class B>
void check_sizes(const A& a, const B& b, const char* what) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(what) + ": size " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
}

template <class T>
struct DiceTerms {
  T overlap = 0;  // sum m * m_hat
  T mass = 0;     // sum m + sum m_hat
  bool guarded() const { return mass < T(kDiceEpsilon); }
  T numerator() const { return T(2) * overlap + (guarded() ? T(kDiceEpsilon) : T(0)); }
  T denominator() const { return mass + (guarded() ? T(kDiceEpsilon) : T(0)); }
};

template <class T>
DiceTerms<T> dice_terms(std::span<const T> m, std::span<const T> m_hat) {
  check_sizes(m, m_hat, "dice_loss");
  DiceTerms<T> t;
  for (std::size_t i = 0; i < m.size(); ++i) {
    t.overlap += m[i] * m_hat[i];
    t.mass += m[i] + m_hat[i];
  }
  return t;
}

}  // namespace

template <class T>
T latent_matching_loss(std::span<const T> z_m, std::span<const T> z_hat) {
  check_sizes(z_m, z_hat, "latent_matching_loss");
  if (z_m.empty()) return T(0);
  T acc = 0;
  for (std::size_t i = 0; i < z_m.size(); ++i) {
    const T d = z_m[i] - z_hat[i];
    acc += d * d;
  }
  return acc / static_cast<T>(z_m.size());
}

template <class T>
void latent_matching_grad(std::span<const T> z_m, std::span<const T> z_hat, std::span<T> grad,
                          T scale) {
  check_sizes(z_m, z_hat, "latent_matching_grad");
  check_sizes(z_m, grad, "latent_matching_grad");
  const T k = scale * T(2) / static_cast<T>(z_m.size());
  for (std::size_t i = 0; i < z_m.size(); ++i) grad[i] += k * (z_hat[i] - z_m[i]);
}

template <class T>
T dice_loss(std::span<const T> m, std::span<const T> m_hat) {
  const DiceTerms<T> t = dice_terms(m, m_hat);
  return T(1) - t.numerator() / t.denominator();
}

template <class T>
void dice_grad(std::span<const T> m, std::span<const T> m_hat, std::span<T> grad, T scale) {
  const DiceTerms<T> t = dice_terms(m, m_hat);
  check_sizes(m, grad, "dice_grad");
  const T n = t.numerator(), d = t.denominator();
  // d/dm_hat_i [1 - n/d] = -(2 m_i d - n) / d^2
  const T inv_d2 = scale / (d * d);
  for (std::size_t i = 0; i < m.size(); ++i) grad[i] -= (T(2) * m[i] * d - n) * inv_d2;
}

LossBreakdown total_loss(std::span<const double> z_m, std::span<const double> z_hat,
                         std::span<const double> m, std::span<const double> m_hat) {
  LossBreakdown b;
  b.lm = latent_matching_loss(z_m, z_hat);
  b.loc = dice_loss(m, m_hat);
  b.total = b.lm + b.loc;
  return b;
}

template float latent_matching_loss<float>(std::span<const float>, std::span<const float>);
template double latent_matching_loss<double>(std::span<const double>, std::span<const double>);
template void latent_matching_grad<float>(std::span<const float>, std::span<const float>,
                                          std::span<float>, float);
template void latent_matching_grad<double>(std::span<const double>, std::span<const double>,
                                           std::span<double>, double);
template float dice_loss<float>(std::span<const float>, std::span<const float>);
template double dice_loss<double>(std::span<const double>, std::span<const double>);
template void dice_grad<float>(std::span<const float>, std::span<const float>, std::span<float>,
                               float);
template void dice_grad<double>(std::span<const double>, std::span<const double>,
                                std::span<double>, double);

}  // namespace sdifl
