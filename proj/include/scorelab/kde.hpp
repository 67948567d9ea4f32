#pragma once

// Gaussian kernel density estimation over a training set.

#include <span>

#include "scorelab/core.hpp"
#include "scorelab/rng.hpp"
#include "scorelab/samplers.hpp"

namespace scorelab {

/// (1/N) sum_i N(x; c y_i, gamma^2 I). c = 1 is the plain KDE with bandwidth
/// gamma; c = mu(delta), gamma = sigma(delta) is the backward law at T - delta
/// of the OU process started from the empirical distribution.
class KdeModel {
 public:
  /// Throws DomainError unless bandwidth > 0 and center_scale lies in (0, 1].
  KdeModel(Dataset dataset, double bandwidth, double center_scale = 1.0);

  /// The mixture (1/N) sum_i N(mu(delta) y_i, sigma(delta)^2 I); needs delta > 0.
  static KdeModel backward_law(Dataset dataset, double delta);

  const Dataset& dataset() const { return dataset_; }
  double bandwidth() const { return bandwidth_; }
  double center_scale() const { return center_scale_; }

 private:
  Dataset dataset_;
  double bandwidth_;
  double center_scale_;
};

/// multiplier * N^(-1/(d+4)) * sigma_hat, where sigma_hat is the square root of
/// the mean per-coordinate sample variance. Needs N >= 2 and nonzero spread.
double scott_bandwidth(const Dataset& dataset, double multiplier = 0.1);

/// Each draw picks a training index uniformly and returns c y_j + gamma Z.
SampleBatch kde_sample(const KdeModel& model, std::size_t count, Rng& rng);
void kde_sample_into(const KdeModel& model, Rng& rng, std::span<double> out);

double kde_log_density(const KdeModel& model, std::span<const double> x);

}  // namespace scorelab
