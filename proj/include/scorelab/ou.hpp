#pragma once

// Forward Ornstein-Uhlenbeck process dX = -X dt + sqrt(2) dB.

#include <span>

#include "scorelab/core.hpp"
#include "scorelab/rng.hpp"

namespace scorelab {

/// Noise schedule at time t: mu = exp(-t), sigma = sqrt(1 - exp(-2t)).
struct OUCoefficients {
  double t = 0.0;
  double mu = 1.0;
  double sigma = 0.0;

  double variance() const { return sigma * sigma; }
};

/// Throws DomainError for negative or non-finite t. t = 0 is accepted and
/// gives sigma = 0; scores and kernels reject it.
OUCoefficients coefficients(double t);

/// Draws X_t = mu(t) y + sigma(t) Z.
Point forward_sample(std::span<const double> y, double t, Rng& rng);
void forward_sample_into(std::span<const double> y, double t, Rng& rng, std::span<double> out);

/// log N(x; center, variance I), evaluated in log space.
double isotropic_gaussian_log_density(std::span<const double> x, std::span<const double> center,
                                      double variance);

/// log p_t(x | y) = log N(x; mu(t) y, sigma(t)^2 I). Throws DomainError for t <= 0.
double transition_log_density(std::span<const double> x, std::span<const double> y, double t);

/// u(t, x | y) = -(x - mu(t) y) / sigma(t)^2. Throws SingularityError for t <= 0.
Point conditional_score(std::span<const double> x, std::span<const double> y, double t);
void conditional_score_into(std::span<const double> x, std::span<const double> y, double t,
                            std::span<double> out);

}  // namespace scorelab
