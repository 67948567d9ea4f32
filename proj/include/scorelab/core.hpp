#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scorelab {

using Point = std::vector<double>;

/// Argument outside the domain of a formula (negative time, nonpositive variance, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Evaluation at a time where a score or kernel is singular (t <= 0).
class SingularityError : public DomainError {
 public:
  using DomainError::DomainError;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

// ||x - scale * y||^2
inline double squared_distance_scaled(std::span<const double> x, double scale,
                                      std::span<const double> y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - scale * y[k];
    s += diff * diff;
  }
  return s;
}

inline bool all_finite(std::span<const double> a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

/// Dense row-per-point storage for a collection of points of one dimension.
class PointSet {
 public:
  PointSet() = default;
  PointSet(std::size_t dim, std::size_t count);
  PointSet(std::size_t dim, std::vector<double> flat);
  static PointSet from_rows(const std::vector<Point>& rows);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const { return data_.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<double> operator[](std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  Point row(std::size_t i) const {
    const auto r = (*this)[i];
    return {r.begin(), r.end()};
  }
  std::span<const double> flat() const { return data_; }

  void push_back(std::span<const double> p);

  bool operator==(const PointSet&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

enum class DatasetSource { synthetic_gaussian, file, manual };

std::string to_string(DatasetSource source);
DatasetSource dataset_source_from_string(const std::string& tag);

/// Immutable training set y_1..y_N with provenance.
class Dataset {
 public:
  /// Throws DomainError on an empty set or non-finite entries.
  explicit Dataset(PointSet points, std::optional<std::uint64_t> seed = std::nullopt,
                   DatasetSource source = DatasetSource::manual);

  std::size_t size() const { return points_.size(); }
  std::size_t dim() const { return points_.dim(); }
  std::span<const double> operator[](std::size_t i) const { return points_[i]; }
  const PointSet& points() const { return points_; }
  std::optional<std::uint64_t> seed() const { return seed_; }
  DatasetSource source() const { return source_; }

  double max_squared_norm() const;
  /// (1/N) sum ||y_i||^2, the empirical second moment.
  double second_moment() const;

  bool operator==(const Dataset&) const = default;

 private:
  PointSet points_;
  std::optional<std::uint64_t> seed_;
  DatasetSource source_;
};

/// Rescales the dataset about the origin so that max ||y_i|| <= radius.
/// Datasets already inside the ball are returned unchanged.
Dataset scale_to_radius(const Dataset& dataset, double radius);

}  // namespace scorelab
