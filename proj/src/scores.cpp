#include "scorelab/scores.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

#include "scorelab/rng.hpp"

namespace scorelab {
namespace {

// exp(-745) is below the smallest subnormal double.
constexpr double kLogWeightFloor = -745.0;

struct SoftmaxPass {
  double max_log = 0.0;
  double sum = 0.0;
};

// Fills w with exp(l_i - max_j l_j), l_i = -||x - scale y_i||^2 / (2 variance).
SoftmaxPass unnormalised_weights(const Dataset& dataset, double scale, double variance,
                                 std::span<const double> x, std::span<double> w) {
  const std::size_t n = dataset.size();
  const double inv_two_var = 1.0 / (2.0 * variance);
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = -squared_distance_scaled(x, scale, dataset[i]) * inv_two_var;
    max_log = std::max(max_log, w[i]);
  }
  if (!std::isfinite(max_log))
    throw std::logic_error("softmax weights: every log-kernel is -inf or NaN");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double shifted = w[i] - max_log;
    w[i] = shifted < kLogWeightFloor ? 0.0 : std::exp(shifted);
    sum += w[i];
  }
  return {max_log, sum};
}

std::vector<double>& scratch(std::size_t n) {
  thread_local std::vector<double> buffer;
  if (buffer.size() < n) buffer.resize(n);
  return buffer;
}

void require_positive_time(double t, const char* what) {
  if (!(t > 0.0)) throw SingularityError(std::string(what) + ": singular at t <= 0");
}

}  // namespace

void IsotropicGaussianTarget::validate() const {
  if (mean.empty()) throw DomainError("Gaussian target: mean must have dimension >= 1");
  if (!all_finite(mean)) throw DomainError("Gaussian target: mean must be finite");
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw DomainError("Gaussian target: variance must be positive");
}

IsotropicGaussian gaussian_marginal(const IsotropicGaussianTarget& target, double t) {
  target.validate();
  if (!(t > 0.0)) throw DomainError("gaussian_marginal: time must be positive");
  const auto c = coefficients(t);
  IsotropicGaussian out{target.mean, c.variance() + c.mu * c.mu * target.variance};
  for (double& m : out.mean) m *= c.mu;
  return out;
}

IsotropicGaussian gaussian_convolution(std::span<const double> mean_a, double var_a,
                                       std::span<const double> mean_b, double var_b) {
  if (!(var_a > 0.0) || !(var_b > 0.0))
    throw DomainError("gaussian_convolution: variances must be positive");
  if (mean_a.size() != mean_b.size()) throw DomainError("gaussian_convolution: dimension mismatch");
  IsotropicGaussian out{Point(mean_a.size()), var_a + var_b};
  for (std::size_t k = 0; k < mean_a.size(); ++k) out.mean[k] = mean_a[k] + mean_b[k];
  return out;
}

Dataset sample_dataset(const IsotropicGaussianTarget& target, std::size_t count,
                       std::uint64_t seed) {
  target.validate();
  if (count == 0) throw DomainError("sample_dataset: count must be positive");
  Rng rng(seed);
  const double sd = std::sqrt(target.variance);
  PointSet points(target.dim(), count);
  for (std::size_t i = 0; i < count; ++i) {
    auto row = points[i];
    for (std::size_t k = 0; k < row.size(); ++k) row[k] = target.mean[k] + sd * rng.normal();
  }
  return Dataset(std::move(points), seed, DatasetSource::synthetic_gaussian);
}

std::string to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::exact_gaussian: return "exact-gaussian";
    case ScoreKind::empirical_optimal: return "empirical-optimal";
    case ScoreKind::conditional: return "conditional";
    case ScoreKind::custom: return "custom";
  }
  return "custom";
}

ScoreField::ScoreField(ScoreKind kind, std::size_t dim, Eval eval, std::string descriptor)
    : kind_(kind), dim_(dim), eval_(std::move(eval)), descriptor_(std::move(descriptor)) {
  if (dim_ == 0) throw DomainError("ScoreField: dimension must be at least 1");
  if (descriptor_.empty()) descriptor_ = to_string(kind_);
}

ScoreField exact_gaussian_score(IsotropicGaussianTarget target) {
  target.validate();
  const std::size_t d = target.dim();
  return ScoreField(
      ScoreKind::exact_gaussian, d,
      [target = std::move(target)](double t, std::span<const double> x, std::span<double> out) {
        require_positive_time(t, "exact_gaussian_score");
        const auto c = coefficients(t);
        const double inv = 1.0 / (c.variance() + c.mu * c.mu * target.variance);
        for (std::size_t k = 0; k < x.size(); ++k) out[k] = (c.mu * target.mean[k] - x[k]) * inv;
      });
}

ScoreField conditional_score_field(Point y) {
  const std::size_t d = y.size();
  return ScoreField(ScoreKind::conditional, d,
                    [y = std::move(y)](double t, std::span<const double> x, std::span<double> out) {
                      conditional_score_into(x, y, t, out);
                    });
}

ScoreField empirical_optimal_score(Dataset dataset) {
  auto data = std::make_shared<const Dataset>(std::move(dataset));
  const std::size_t d = data->dim();
  return ScoreField(
      ScoreKind::empirical_optimal, d,
      [data](double t, std::span<const double> x, std::span<double> out) {
        require_positive_time(t, "empirical_optimal_score");
        const auto c = coefficients(t);
        const double variance = c.variance();
        auto& w = scratch(data->size());
        const auto pass = unnormalised_weights(*data, c.mu, variance, x, w);
        const std::size_t dim = x.size();
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < data->size(); ++i) {
          if (w[i] == 0.0) continue;
          const auto y = (*data)[i];
          for (std::size_t k = 0; k < dim; ++k) out[k] += w[i] * y[k];
        }
        const double a = -1.0 / variance;
        const double b = c.mu / (variance * pass.sum);
        for (std::size_t k = 0; k < dim; ++k) out[k] = a * x[k] + b * out[k];
      },
      "empirical-optimal(N=" + std::to_string(data->size()) + ")");
}

std::vector<double> softmax_weights(const Dataset& dataset, double t, std::span<const double> x) {
  require_positive_time(t, "softmax_weights");
  const auto c = coefficients(t);
  std::vector<double> w(dataset.size());
  const auto pass = unnormalised_weights(dataset, c.mu, c.variance(), x, w);
  for (double& v : w) v /= pass.sum;
  return w;
}

double scaled_mixture_log_density(const Dataset& dataset, double center_scale, double variance,
                                  std::span<const double> x) {
  if (!(variance > 0.0)) throw DomainError("mixture log-density: variance must be positive");
  auto& w = scratch(dataset.size());
  const auto pass = unnormalised_weights(dataset, center_scale, variance, x, w);
  const double d = static_cast<double>(dataset.dim());
  return -0.5 * d * std::log(2.0 * std::numbers::pi * variance) + pass.max_log +
         std::log(pass.sum) - std::log(static_cast<double>(dataset.size()));
}

double empirical_mixture_log_density(const Dataset& dataset, double t, std::span<const double> x) {
  if (!(t > 0.0)) throw DomainError("empirical_mixture_log_density: time must be positive");
  const auto c = coefficients(t);
  return scaled_mixture_log_density(dataset, c.mu, c.variance(), x);
}

KernelMoments kernel_moments(const Dataset& dataset, double t, std::span<const double> x) {
  if (!(t > 0.0)) throw DomainError("kernel_moments: time must be positive");
  const auto c = coefficients(t);
  const double variance = c.variance();
  const double d = static_cast<double>(dataset.dim());
  const double norm = std::pow(2.0 * std::numbers::pi * variance, -0.5 * d);
  KernelMoments out{0.0, Point(dataset.dim(), 0.0)};
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const double k = norm * std::exp(-squared_distance_scaled(x, c.mu, dataset[i]) / (2.0 * variance));
    out.density += k;
    for (std::size_t j = 0; j < dataset.dim(); ++j) out.weighted_sum[j] += k * dataset[i][j];
  }
  const double inv_n = 1.0 / static_cast<double>(dataset.size());
  out.density *= inv_n;
  for (double& v : out.weighted_sum) v *= inv_n;
  return out;
}

WeightedAverageBounds weighted_average_bounds_check(const Dataset& dataset, double t,
                                                    std::span<const double> x) {
  const auto w = softmax_weights(dataset, t, x);
  const auto c = coefficients(t);
  Point mean(dataset.dim(), 0.0);
  double spread = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (std::size_t k = 0; k < dataset.dim(); ++k) mean[k] += w[i] * dataset[i][k];
    spread += squared_distance_scaled(x, c.mu, dataset[i]);
  }
  spread /= static_cast<double>(dataset.size());
  WeightedAverageBounds out;
  out.lhs = squared_norm(mean);
  out.bound_uniform = 2.0 * (squared_norm(x) + spread) / (c.mu * c.mu);
  out.bound_radius = dataset.max_squared_norm();
  return out;
}

CanonicalAverageBound canonical_weighted_average(const PointSet& vectors) {
  if (vectors.empty()) throw DomainError("canonical_weighted_average: no vectors");
  const std::size_t n = vectors.size();
  std::vector<double> logw(n);
  double max_log = -std::numeric_limits<double>::infinity();
  double rhs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sq = squared_norm(vectors[i]);
    rhs += sq;
    logw[i] = -sq;
    max_log = std::max(max_log, logw[i]);
  }
  double sum = 0.0;
  for (double& v : logw) {
    v = (v - max_log) < kLogWeightFloor ? 0.0 : std::exp(v - max_log);
    sum += v;
  }
  Point mean(vectors.dim(), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < vectors.dim(); ++k) mean[k] += logw[i] / sum * vectors[i][k];
  return {squared_norm(mean), rhs / static_cast<double>(n)};
}

double mixture_log_density_lower_bound(const Dataset& dataset, double t,
                                       std::span<const double> x, double lambda) {
  if (!(t > 0.0)) throw DomainError("mixture_log_density_lower_bound: time must be positive");
  if (!(lambda > 0.0)) throw DomainError("mixture_log_density_lower_bound: lambda must be positive");
  const auto c = coefficients(t);
  const double variance = c.variance();
  const double d = static_cast<double>(dataset.dim());
  const double y_coeff = (c.mu + lambda * c.mu * c.mu) / (2.0 * lambda * variance);
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    logs[i] = -y_coeff * squared_norm(dataset[i]);
    max_log = std::max(max_log, logs[i]);
  }
  double sum = 0.0;
  for (double l : logs) sum += std::exp(l - max_log);
  const double log_k = max_log + std::log(sum) - std::log(static_cast<double>(dataset.size()));
  return -0.5 * d * std::log(2.0 * std::numbers::pi * variance) -
         (1.0 + lambda * c.mu) * squared_norm(x) / (2.0 * variance) + log_k;
}

}  // namespace scorelab
