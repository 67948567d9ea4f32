#include "scorelab/kde.hpp"

#include "scorelab/ou.hpp"
#include "scorelab/scores.hpp"

namespace scorelab {

KdeModel::KdeModel(Dataset dataset, double bandwidth, double center_scale)
    : dataset_(std::move(dataset)), bandwidth_(bandwidth), center_scale_(center_scale) {
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_))
    throw DomainError("KdeModel: bandwidth must be positive");
  if (!(center_scale_ > 0.0) || center_scale_ > 1.0)
    throw DomainError("KdeModel: center scale must lie in (0, 1]");
}

KdeModel KdeModel::backward_law(Dataset dataset, double delta) {
  if (!(delta > 0.0)) throw DomainError("KdeModel::backward_law: delta must be positive");
  const auto c = coefficients(delta);
  return KdeModel(std::move(dataset), c.sigma, c.mu);
}

double scott_bandwidth(const Dataset& dataset, double multiplier) {
  const std::size_t n = dataset.size();
  if (n < 2) throw DomainError("scott_bandwidth: need at least two points");
  if (!(multiplier > 0.0)) throw DomainError("scott_bandwidth: multiplier must be positive");
  const std::size_t d = dataset.dim();
  double pooled = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += dataset[i][k];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (dataset[i][k] - mean) * (dataset[i][k] - mean);
    pooled += ss / static_cast<double>(n - 1);
  }
  const double sigma_hat = std::sqrt(pooled / static_cast<double>(d));
  if (!(sigma_hat > 0.0)) throw DomainError("scott_bandwidth: dataset has zero spread");
  return multiplier * std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0)) *
         sigma_hat;
}

void kde_sample_into(const KdeModel& model, Rng& rng, std::span<double> out) {
  const auto& data = model.dataset();
  const auto y = data[rng.index(data.size())];
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = model.center_scale() * y[k] + model.bandwidth() * rng.normal();
}

SampleBatch kde_sample(const KdeModel& model, std::size_t count, Rng& rng) {
  SampleBatch batch;
  batch.descriptor = "kde";
  batch.points = PointSet(model.dataset().dim(), count);
  for (std::size_t j = 0; j < count; ++j) kde_sample_into(model, rng, batch.points[j]);
  return batch;
}

double kde_log_density(const KdeModel& model, std::span<const double> x) {
  return scaled_mixture_log_density(model.dataset(), model.center_scale(),
                                    model.bandwidth() * model.bandwidth(), x);
}

}  // namespace scorelab
