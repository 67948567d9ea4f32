#include "scorelab/ou.hpp"

#include <numbers>
#include <string>

namespace scorelab {

OUCoefficients coefficients(double t) {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw DomainError("coefficients: time must be finite and nonnegative, got " + std::to_string(t));
  const double variance = -std::expm1(-2.0 * t);
  return {t, std::exp(-t), std::sqrt(variance)};
}

void forward_sample_into(std::span<const double> y, double t, Rng& rng, std::span<double> out) {
  if (!(t > 0.0)) throw DomainError("forward_sample: time must be positive");
  const auto c = coefficients(t);
  for (std::size_t k = 0; k < y.size(); ++k) out[k] = c.mu * y[k] + c.sigma * rng.normal();
}

Point forward_sample(std::span<const double> y, double t, Rng& rng) {
  Point out(y.size());
  forward_sample_into(y, t, rng, out);
  return out;
}

double isotropic_gaussian_log_density(std::span<const double> x, std::span<const double> center,
                                      double variance) {
  if (!(variance > 0.0)) throw DomainError("gaussian log-density: variance must be positive");
  const double d = static_cast<double>(x.size());
  return -0.5 * d * std::log(2.0 * std::numbers::pi * variance) -
         squared_distance(x, center) / (2.0 * variance);
}

double transition_log_density(std::span<const double> x, std::span<const double> y, double t) {
  if (!(t > 0.0)) throw DomainError("transition_log_density: kernel is degenerate at t <= 0");
  const auto c = coefficients(t);
  const double variance = c.variance();
  const double d = static_cast<double>(x.size());
  return -0.5 * d * std::log(2.0 * std::numbers::pi * variance) -
         squared_distance_scaled(x, c.mu, y) / (2.0 * variance);
}

void conditional_score_into(std::span<const double> x, std::span<const double> y, double t,
                            std::span<double> out) {
  if (!(t > 0.0)) throw SingularityError("conditional_score: singular at t <= 0");
  const auto c = coefficients(t);
  const double inv_var = 1.0 / c.variance();
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = -(x[k] - c.mu * y[k]) * inv_var;
}

Point conditional_score(std::span<const double> x, std::span<const double> y, double t) {
  Point out(x.size());
  conditional_score_into(x, y, t, out);
  return out;
}

}  // namespace scorelab
