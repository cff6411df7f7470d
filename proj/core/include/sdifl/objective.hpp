#pragma once

#include <span>

namespace sdifl {

inline constexpr double kDiceEpsilon = 1e-6;

struct LossBreakdown {
  double lm = 0.0;
  double loc = 0.0;
  double total = 0.0;
};

// Mean of squared element differences. Throws ShapeError on size mismatch.
template <class T>
T latent_matching_loss(std::span<const T> z_m, std::span<const T> z_hat);

// d/dz_hat of latent_matching_loss, scaled by `scale`, added into `grad`.
template <class T>
void latent_matching_grad(std::span<const T> z_m, std::span<const T> z_hat, std::span<T> grad,
                          T scale = T(1));

// Soft Dice: 1 - 2 sum(m * m_hat) / (sum m + sum m_hat). When the mass
// sum(m) + sum(m_hat) falls below kDiceEpsilon the guarded form
// 1 - (2 sum(m * m_hat) + eps) / (mass + eps) is used instead, so empty
// mask against empty prediction is 0 rather than NaN.
template <class T>
T dice_loss(std::span<const T> m, std::span<const T> m_hat);

template <class T>
void dice_grad(std::span<const T> m, std::span<const T> m_hat, std::span<T> grad, T scale = T(1));

LossBreakdown total_loss(std::span<const double> z_m, std::span<const double> z_hat,
                         std::span<const double> m, std::span<const double> m_hat);

}  // namespace sdifl
