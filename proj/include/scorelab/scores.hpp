#pragma once

// Score fields and the Gaussian algebra around them.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scorelab/core.hpp"
#include "scorelab/ou.hpp"

namespace scorelab {

/// N(mean, variance I) target distribution.
struct IsotropicGaussianTarget {
  Point mean;
  double variance = 1.0;

  std::size_t dim() const { return mean.size(); }
  /// Throws DomainError unless variance > 0 and the mean is finite and nonempty.
  void validate() const;
};

struct IsotropicGaussian {
  Point mean;
  double variance = 0.0;
};

/// Parameters of p_t for a Gaussian target: (mu(t) m, sigma(t)^2 + mu(t)^2 v).
IsotropicGaussian gaussian_marginal(const IsotropicGaussianTarget& target, double t);

/// N(a, va) * N(b, vb) = N(a + b, va + vb). Throws DomainError unless both variances are positive.
IsotropicGaussian gaussian_convolution(std::span<const double> mean_a, double var_a,
                                       std::span<const double> mean_b, double var_b);

/// N i.i.d. draws from the target, tagged with the seed.
Dataset sample_dataset(const IsotropicGaussianTarget& target, std::size_t count,
                       std::uint64_t seed);

enum class ScoreKind { exact_gaussian, empirical_optimal, conditional, custom };

std::string to_string(ScoreKind kind);

/// An evaluable map (t, x) -> R^d. Evaluation is pure and reentrant.
class ScoreField {
 public:
  using Eval = std::function<void(double t, std::span<const double> x, std::span<double> out)>;

  ScoreField(ScoreKind kind, std::size_t dim, Eval eval, std::string descriptor = {});

  Point operator()(double t, std::span<const double> x) const {
    Point out(dim_);
    eval_(t, x, out);
    return out;
  }
  void eval_into(double t, std::span<const double> x, std::span<double> out) const {
    eval_(t, x, out);
  }

  ScoreKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  const std::string& descriptor() const { return descriptor_; }

 private:
  ScoreKind kind_;
  std::size_t dim_;
  Eval eval_;
  std::string descriptor_;
};

/// u(t, x) = (mu(t) m - x) / (sigma(t)^2 + mu(t)^2 v).
ScoreField exact_gaussian_score(IsotropicGaussianTarget target);

/// x -> u(t, x | y) for a fixed data point y.
ScoreField conditional_score_field(Point y);

/// The empirical optimal score s^N(t, x), the minimiser of the empirical
/// conditional score-matching loss over all L^2 fields. Evaluated as
/// a_t x + b_t sum_i w_i y_i with a_t = -1/sigma^2, b_t = mu/sigma^2 and
/// softmax weights from one max-shifted pass.
ScoreField empirical_optimal_score(Dataset dataset);

/// w_i = p_t(x|y_i) / sum_j p_t(x|y_j). Components more than 745 nats below
/// the largest log-kernel get weight exactly 0.
std::vector<double> softmax_weights(const Dataset& dataset, double t, std::span<const double> x);

/// log((1/N) sum_i N(x; mu(t) y_i, sigma(t)^2 I)).
double empirical_mixture_log_density(const Dataset& dataset, double t, std::span<const double> x);

/// log((1/N) sum_i N(x; scale y_i, variance I)), shared by the OU mixture and KDE.
double scaled_mixture_log_density(const Dataset& dataset, double center_scale, double variance,
                                  std::span<const double> x);

/// p_t^N(x) = (1/N) sum p_t(x|y_i) and v_t^N(x) = (1/N) sum y_i p_t(x|y_i)
/// in raw (non-log) form; only meaningful where the density is representable.
struct KernelMoments {
  double density = 0.0;
  Point weighted_sum;
};
KernelMoments kernel_moments(const Dataset& dataset, double t, std::span<const double> x);

/// Weighted-average bounds at (t, x):
///   lhs           = ||sum_i w_i y_i||^2
///   bound_uniform = (2 / mu^2) (||x||^2 + (1/N) sum_i ||x - mu y_i||^2)
///   bound_radius  = max_i ||y_i||^2
/// bound_uniform follows from applying the softmax weighted-average inequality
/// to z_i = (x - mu y_i) / (sqrt(2) sigma), whose softmax(-||z_i||^2) weights are w_i.
struct WeightedAverageBounds {
  double lhs = 0.0;
  double bound_uniform = 0.0;
  double bound_radius = 0.0;

  bool holds(double rel_tol = 1e-12) const {
    const auto within = [rel_tol](double a, double b) { return a <= b * (1.0 + rel_tol) + rel_tol; };
    return within(lhs, bound_radius) && within(lhs, bound_uniform);
  }
};
WeightedAverageBounds weighted_average_bounds_check(const Dataset& dataset, double t,
                                                    std::span<const double> x);

/// ||sum_i softmax(-||y||^2)_i y_i||^2 (lhs) and (1/N) sum ||y_i||^2 (rhs).
struct CanonicalAverageBound {
  double lhs = 0.0;
  double rhs = 0.0;
};
CanonicalAverageBound canonical_weighted_average(const PointSet& vectors);

/// Lower bound on log p_t^N(x) obtained from Young's inequality with parameter lambda > 0:
///   -(d/2) log(2 pi sigma^2) - (1 + lambda mu) ||x||^2 / (2 sigma^2)
///   + log((1/N) sum_i exp(-(mu + lambda mu^2) ||y_i||^2 / (2 lambda sigma^2))).
double mixture_log_density_lower_bound(const Dataset& dataset, double t,
                                       std::span<const double> x, double lambda);

}  // namespace scorelab
