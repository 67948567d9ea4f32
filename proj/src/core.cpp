#include "scorelab/core.hpp"

#include <algorithm>

namespace scorelab {

PointSet::PointSet(std::size_t dim, std::size_t count) : dim_(dim), data_(dim * count, 0.0) {
  if (dim == 0) throw DomainError("PointSet: dimension must be at least 1");
}

PointSet::PointSet(std::size_t dim, std::vector<double> flat) : dim_(dim), data_(std::move(flat)) {
  if (dim == 0) throw DomainError("PointSet: dimension must be at least 1");
  if (data_.size() % dim != 0)
    throw DomainError("PointSet: flat storage is not a multiple of the dimension");
}

PointSet PointSet::from_rows(const std::vector<Point>& rows) {
  if (rows.empty()) throw DomainError("PointSet: no rows");
  PointSet out(rows.front().size(), 0);
  for (const auto& r : rows) out.push_back(r);
  return out;
}

void PointSet::push_back(std::span<const double> p) {
  if (dim_ == 0) dim_ = p.size();
  if (p.size() != dim_ || dim_ == 0) throw DomainError("PointSet: dimension mismatch");
  data_.insert(data_.end(), p.begin(), p.end());
}

std::string to_string(DatasetSource source) {
  switch (source) {
    case DatasetSource::synthetic_gaussian: return "synthetic-gaussian";
    case DatasetSource::file: return "file";
    case DatasetSource::manual: return "manual";
  }
  return "manual";
}

DatasetSource dataset_source_from_string(const std::string& tag) {
  if (tag == "synthetic-gaussian") return DatasetSource::synthetic_gaussian;
  if (tag == "file") return DatasetSource::file;
  if (tag == "manual") return DatasetSource::manual;
  throw DomainError("unknown dataset source tag '" + tag + "'");
}

Dataset::Dataset(PointSet points, std::optional<std::uint64_t> seed, DatasetSource source)
    : points_(std::move(points)), seed_(seed), source_(source) {
  if (points_.empty()) throw DomainError("Dataset: at least one point is required");
  if (!all_finite(points_.flat())) throw DomainError("Dataset: non-finite entry");
}

double Dataset::max_squared_norm() const {
  double best = 0.0;
  for (std::size_t i = 0; i < size(); ++i) best = std::max(best, squared_norm(points_[i]));
  return best;
}

double Dataset::second_moment() const {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) s += squared_norm(points_[i]);
  return s / static_cast<double>(size());
}

Dataset scale_to_radius(const Dataset& dataset, double radius) {
  if (!(radius > 0.0)) throw DomainError("scale_to_radius: radius must be positive");
  const double max_norm = std::sqrt(dataset.max_squared_norm());
  if (max_norm <= radius) return dataset;
  const double factor = radius / max_norm;
  std::vector<double> flat(dataset.points().flat().begin(), dataset.points().flat().end());
  for (double& v : flat) v *= factor;
  return Dataset(PointSet(dataset.dim(), std::move(flat)), dataset.seed(), dataset.source());
}

}  // namespace scorelab
