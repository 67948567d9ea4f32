#include "scorelab/estimators.hpp"

#include <algorithm>
#include <numeric>

#include "scorelab/ou.hpp"
#include "scorelab/parallel.hpp"

namespace scorelab {

EstimateReport summarize(std::span<const double> values, nlohmann::json parameters) {
  if (values.empty()) throw DomainError("summarize: no values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double se = values.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return {mean, se, values.size(), std::move(parameters)};
}

void ErrorCurve::validate() const {
  for (std::size_t i = 1; i < entries.size(); ++i)
    if (entries[i].sample_count <= entries[i - 1].sample_count)
      throw DomainError("ErrorCurve: sample counts must be strictly increasing");
}

LineFit loglog_fit(std::span<const double> sample_counts, std::span<const double> values) {
  if (sample_counts.size() != values.size()) throw DomainError("loglog_fit: size mismatch");
  if (values.size() < 3) throw DomainError("loglog_fit: need at least three points");
  const double n = static_cast<double>(values.size());
  double sx = 0.0, sy = 0.0;
  std::vector<double> lx(values.size()), ly(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !(sample_counts[i] > 0.0))
      throw DomainError("loglog_fit: values must be positive");
    lx[i] = std::log(sample_counts[i]);
    ly[i] = std::log(values[i]);
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("loglog_fit: sample counts must not all be equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

LineFit loglog_slope(const ErrorCurve& curve) {
  curve.validate();
  std::vector<double> ns, vs;
  for (const auto& e : curve.entries) {
    ns.push_back(static_cast<double>(e.sample_count));
    vs.push_back(e.estimate.value);
  }
  return loglog_fit(ns, vs);
}

// ---------------------------------------------------------------------------

namespace {

void require_time(double t) {
  if (!(t > 0.0)) throw DomainError("loss estimators: time must be positive");
}

void require_dims(const ScoreField& s, std::size_t d) {
  if (s.dim() != d) throw DomainError("loss estimators: score dimension does not match target");
}

// Draws y ~ target into y, then x ~ p_t(.|y) into x.
void draw_pair(const IsotropicGaussianTarget& target, const OUCoefficients& c, Rng& rng,
               std::span<double> y, std::span<double> x) {
  const double sd = std::sqrt(target.variance);
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = target.mean[k] + sd * rng.normal();
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = c.mu * y[k] + c.sigma * rng.normal();
}

double squared_error(std::span<const double> a, std::span<const double> b) {
  return squared_distance(a, b);
}

nlohmann::json loss_parameters(const char* kind, double t, std::size_t m) {
  return {{"estimator", kind}, {"t", t}, {"mc_samples", m}};
}

// Integrand values of E||s - reference||^2 where reference(x, y) is conditional or exact.
template <class Integrand>
std::vector<double> gaussian_pair_values(const IsotropicGaussianTarget& target, double t,
                                         std::size_t m, Rng& rng, Integrand&& integrand) {
  const auto c = coefficients(t);
  const std::size_t d = target.dim();
  Point y(d), x(d);
  std::vector<double> values(m);
  for (std::size_t j = 0; j < m; ++j) {
    draw_pair(target, c, rng, y, x);
    values[j] = integrand(x, y);
  }
  return values;
}

}  // namespace

EstimateReport csm_loss(const ScoreField& s, const IsotropicGaussianTarget& target, double t,
                        std::size_t mc_samples, Rng& rng) {
  require_time(t);
  target.validate();
  require_dims(s, target.dim());
  Point sv(target.dim()), uv(target.dim());
  const auto values = gaussian_pair_values(target, t, mc_samples, rng, [&](auto x, auto y) {
    s.eval_into(t, x, sv);
    conditional_score_into(x, y, t, uv);
    return squared_error(sv, uv);
  });
  return summarize(values, loss_parameters("csm-gaussian", t, mc_samples));
}

EstimateReport sm_loss(const ScoreField& s, const IsotropicGaussianTarget& target, double t,
                       std::size_t mc_samples, Rng& rng) {
  require_time(t);
  target.validate();
  require_dims(s, target.dim());
  const auto exact = exact_gaussian_score(target);
  Point sv(target.dim()), uv(target.dim());
  const auto values = gaussian_pair_values(target, t, mc_samples, rng, [&](auto x, auto) {
    s.eval_into(t, x, sv);
    exact.eval_into(t, x, uv);
    return squared_error(sv, uv);
  });
  return summarize(values, loss_parameters("sm-gaussian", t, mc_samples));
}

EstimateReport csm_loss_difference(const ScoreField& s1, const ScoreField& s2,
                                   const IsotropicGaussianTarget& target, double t,
                                   std::size_t mc_samples, Rng& rng) {
  require_time(t);
  target.validate();
  require_dims(s1, target.dim());
  require_dims(s2, target.dim());
  const std::size_t d = target.dim();
  Point a(d), b(d), uv(d);
  const auto values = gaussian_pair_values(target, t, mc_samples, rng, [&](auto x, auto y) {
    s1.eval_into(t, x, a);
    s2.eval_into(t, x, b);
    conditional_score_into(x, y, t, uv);
    return squared_error(a, uv) - squared_error(b, uv);
  });
  return summarize(values, loss_parameters("csm-difference", t, mc_samples));
}

EstimateReport sm_loss_difference(const ScoreField& s1, const ScoreField& s2,
                                  const IsotropicGaussianTarget& target, double t,
                                  std::size_t mc_samples, Rng& rng) {
  require_time(t);
  target.validate();
  require_dims(s1, target.dim());
  require_dims(s2, target.dim());
  const auto exact = exact_gaussian_score(target);
  const std::size_t d = target.dim();
  Point a(d), b(d), uv(d);
  const auto values = gaussian_pair_values(target, t, mc_samples, rng, [&](auto x, auto) {
    s1.eval_into(t, x, a);
    s2.eval_into(t, x, b);
    exact.eval_into(t, x, uv);
    return squared_error(a, uv) - squared_error(b, uv);
  });
  return summarize(values, loss_parameters("sm-difference", t, mc_samples));
}

EstimateReport csm_loss(const ScoreField& s, const Dataset& dataset, double t,
                        std::size_t mc_samples, Rng& rng) {
  require_time(t);
  require_dims(s, dataset.dim());
  const auto c = coefficients(t);
  const std::size_t d = dataset.dim();
  const double inv_var = 1.0 / c.variance();
  Point x(d), sv(d);
  std::vector<double> values(mc_samples);
  for (std::size_t j = 0; j < mc_samples; ++j) {
    const auto y = dataset[rng.index(dataset.size())];
    for (std::size_t k = 0; k < d; ++k) x[k] = c.mu * y[k] + c.sigma * rng.normal();
    s.eval_into(t, x, sv);
    const auto w = softmax_weights(dataset, t, x);
    double acc = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (w[i] == 0.0) continue;
      double sq = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double u = -(x[k] - c.mu * dataset[i][k]) * inv_var;
        sq += (sv[k] - u) * (sv[k] - u);
      }
      acc += w[i] * sq;
    }
    values[j] = acc;
  }
  return summarize(values, loss_parameters("csm-empirical", t, mc_samples));
}

// ---------------------------------------------------------------------------

nlohmann::json ScoreErrorParams::to_json() const {
  return {{"N", sample_count},       {"delta", early_stop},
          {"T", horizon},            {"grid_step", grid_step},
          {"M", mc_samples},         {"repetitions", repetitions},
          {"seed", seed}};
}

std::vector<double> score_error_times(double early_stop, double horizon, double step) {
  if (!(early_stop > 0.0) || !(early_stop < horizon) || !std::isfinite(horizon))
    throw DomainError("score error grid: need 0 < delta < T");
  if (!(step > 0.0)) throw DomainError("score error grid: step must be positive");
  const auto count = static_cast<std::size_t>(std::floor((horizon - early_stop) / step + 1e-9)) + 1;
  std::vector<double> times(count);
  for (std::size_t k = 0; k < count; ++k) times[k] = early_stop + static_cast<double>(k) * step;
  return times;
}

double mean_squared_score_error(const ScoreField& s, const ScoreField& u,
                                std::span<const double> times, std::span<const PointSet> samples) {
  if (times.size() != samples.size() || times.empty())
    throw DomainError("mean_squared_score_error: one sample set per time is required");
  const std::size_t d = u.dim();
  Point sv(d), uv(d);
  double total = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    double acc = 0.0;
    for (std::size_t m = 0; m < samples[k].size(); ++m) {
      s.eval_into(times[k], samples[k][m], sv);
      u.eval_into(times[k], samples[k][m], uv);
      acc += squared_distance(sv, uv);
    }
    total += acc / static_cast<double>(samples[k].size());
  }
  return total / static_cast<double>(times.size());
}

EstimateReport score_error_protocol(const IsotropicGaussianTarget& target,
                                    const ScoreErrorParams& params, const ScoreFactory& factory) {
  target.validate();
  if (params.sample_count == 0) throw DomainError("score error protocol: N must be positive");
  if (params.mc_samples == 0 || params.repetitions == 0)
    throw DomainError("score error protocol: M and repetitions must be positive");
  const auto times = score_error_times(params.early_stop, params.horizon, params.grid_step);
  const std::size_t n = params.sample_count;
  const std::size_t reps = params.repetitions;
  const std::size_t k_count = times.size();
  const std::size_t d = target.dim();
  const auto exact = exact_gaussian_score(target);

  std::vector<ScoreField> fields;
  fields.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    auto data = sample_dataset(target, n, derive_seed(params.seed, {n, r, 0}));
    fields.push_back(factory ? factory(data) : empirical_optimal_score(std::move(data)));
  }

  std::vector<double> per_slot(reps * k_count);
  parallel_for(reps * k_count, [&](std::size_t slot) {
    const std::size_t r = slot / k_count;
    const std::size_t k = slot % k_count;
    const double t = times[k];
    const auto marginal = gaussian_marginal(target, t);
    const double sd = std::sqrt(marginal.variance);
    Rng rng = derive_stream(params.seed, {n, r, 1, k});
    Point x(d), sv(d), uv(d);
    double acc = 0.0;
    for (std::size_t m = 0; m < params.mc_samples; ++m) {
      for (std::size_t j = 0; j < d; ++j) x[j] = marginal.mean[j] + sd * rng.normal();
      fields[r].eval_into(t, x, sv);
      exact.eval_into(t, x, uv);
      acc += squared_distance(sv, uv);
    }
    per_slot[slot] = acc / static_cast<double>(params.mc_samples);
  });

  std::vector<double> per_rep(reps, 0.0);
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t k = 0; k < k_count; ++k) per_rep[r] += per_slot[r * k_count + k];
    per_rep[r] /= static_cast<double>(k_count);
  }
  auto params_json = params.to_json();
  params_json["K"] = k_count;
  params_json["per_repetition"] = per_rep;
  return summarize(per_rep, std::move(params_json));
}

// ---------------------------------------------------------------------------

double kl_gaussians(std::span<const double> mean_p, const DiagonalCovariance& cov_p,
                    std::span<const double> mean_q, const DiagonalCovariance& cov_q) {
  const std::size_t d = mean_p.size();
  if (mean_q.size() != d || cov_p.variances.size() != d || cov_q.variances.size() != d)
    throw DomainError("kl_gaussians: dimension mismatch");
  double log_det_ratio = 0.0, mahalanobis = 0.0, trace = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double vp = cov_p.variances[k], vq = cov_q.variances[k];
    if (!(vp > 0.0) || !(vq > 0.0)) throw DomainError("kl_gaussians: variances must be positive");
    log_det_ratio += std::log(vq / vp);
    const double diff = mean_p[k] - mean_q[k];
    mahalanobis += diff * diff / vq;
    trace += vp / vq;
  }
  return 0.5 * (log_det_ratio - static_cast<double>(d) + mahalanobis + trace);
}

// ---------------------------------------------------------------------------

PointSampler equal_mixture(PointSampler a, PointSampler b) {
  return [a = std::move(a), b = std::move(b)](Rng& rng, std::span<double> out) {
    if (rng.uniform() < 0.5)
      a(rng, out);
    else
      b(rng, out);
  };
}

EstimateReport tv_mc(const LogDensity& f, const LogDensity& g, const PointSampler& mixture,
                     std::size_t mc_samples, Rng& rng) {
  if (f.dim != g.dim) throw DomainError("tv_mc: dimension mismatch");
  if (mc_samples == 0) throw DomainError("tv_mc: need at least one sample");
  Point x(f.dim);
  std::vector<double> values(mc_samples);
  for (std::size_t j = 0; j < mc_samples; ++j) {
    mixture(rng, x);
    const double lf = f.eval(x), lg = g.eval(x);
    // |f - g| / (f + g) in log space; both -inf means x is off both supports.
    values[j] = (std::isinf(lf) && std::isinf(lg)) ? 0.0 : std::abs(std::tanh(0.5 * (lf - lg)));
  }
  return summarize(values, {{"estimator", "tv-mc"}, {"mc_samples", mc_samples}});
}

double tv_quadrature_1d(const LogDensity& f, const LogDensity& g, double lo, double hi,
                        std::size_t grid_points) {
  if (f.dim != 1 || g.dim != 1) throw DomainError("tv_quadrature_1d: densities must be 1-D");
  if (!(hi > lo)) throw DomainError("tv_quadrature_1d: empty range");
  if (grid_points < 2) throw DomainError("tv_quadrature_1d: need at least two grid points");
  const double h = (hi - lo) / static_cast<double>(grid_points - 1);
  double sum = 0.0;
  double x[1];
  for (std::size_t i = 0; i < grid_points; ++i) {
    x[0] = lo + static_cast<double>(i) * h;
    const double v = std::abs(std::exp(f.eval(x)) - std::exp(g.eval(x)));
    sum += (i == 0 || i + 1 == grid_points) ? 0.5 * v : v;
  }
  return 0.5 * h * sum;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kMaxPrecomputedPool = 4096;

double euclid(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

// Pooled-sample energy statistic with group sums computed from a membership mask.
class EnergyPool {
 public:
  EnergyPool(const PointSet& a, const PointSet& b) : n_(a.size()), m_(b.size()), pool_(a.dim(), 0) {
    for (std::size_t i = 0; i < a.size(); ++i) pool_.push_back(a[i]);
    for (std::size_t i = 0; i < b.size(); ++i) pool_.push_back(b[i]);
    const std::size_t total = n_ + m_;
    if (total <= kMaxPrecomputedPool) {
      distances_.resize(total * total);
      for (std::size_t i = 0; i < total; ++i)
        for (std::size_t j = i; j < total; ++j)
          distances_[i * total + j] = distances_[j * total + i] = euclid(pool_[i], pool_[j]);
    }
    row_sums_.assign(total, 0.0);
    for (std::size_t i = 0; i < total; ++i)
      for (std::size_t j = 0; j < total; ++j) row_sums_[i] += distance(i, j);
  }

  // in_a[i] = 1 when pooled point i belongs to the first group (exactly n of them).
  double statistic(const std::vector<double>& in_a) const {
    const std::size_t total = n_ + m_;
    double within_a = 0.0, cross = 0.0, within_b = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
      double to_a = 0.0;
      if (!distances_.empty()) {
        const double* row = distances_.data() + i * total;
        for (std::size_t j = 0; j < total; ++j) to_a += row[j] * in_a[j];
      } else {
        for (std::size_t j = 0; j < total; ++j)
          if (in_a[j] != 0.0) to_a += euclid(pool_[i], pool_[j]);
      }
      if (in_a[i] != 0.0) {
        within_a += to_a;
      } else {
        cross += to_a;
        within_b += row_sums_[i] - to_a;
      }
    }
    const double n = static_cast<double>(n_), m = static_cast<double>(m_);
    const double e = 2.0 * cross / (n * m) - within_a / (n * n) - within_b / (m * m);
    return n * m / (n + m) * e;
  }

  std::vector<double> identity_mask() const {
    std::vector<double> mask(n_ + m_, 0.0);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(n_), 1.0);
    return mask;
  }

 private:
  double distance(std::size_t i, std::size_t j) const {
    return distances_.empty() ? euclid(pool_[i], pool_[j]) : distances_[i * (n_ + m_) + j];
  }

  std::size_t n_, m_;
  PointSet pool_;
  std::vector<double> distances_;
  std::vector<double> row_sums_;
};

void check_batches(const PointSet& a, const PointSet& b) {
  if (a.empty() || b.empty()) throw DomainError("energy distance: empty batch");
  if (a.dim() != b.dim()) throw DomainError("energy distance: dimension mismatch");
}

}  // namespace

double energy_statistic(const PointSet& a, const PointSet& b) {
  check_batches(a, b);
  const EnergyPool pool(a, b);
  return pool.statistic(pool.identity_mask());
}

double EnergyTestResult::critical_value(double alpha) const {
  return quantile(null_statistics, 1.0 - alpha);
}

EnergyTestResult energy_distance_test(const PointSet& a, const PointSet& b,
                                      std::size_t permutations, Rng& rng) {
  check_batches(a, b);
  if (permutations < 200) throw DomainError("energy distance test: need at least 200 permutations");
  const EnergyPool pool(a, b);
  EnergyTestResult result;
  const auto identity = pool.identity_mask();
  result.statistic = pool.statistic(identity);
  const std::uint64_t base = rng.next_u64();
  result.null_statistics.resize(permutations);
  parallel_for(permutations, [&](std::size_t p) {
    Rng perm_rng = derive_stream(base, {p});
    auto mask = identity;
    for (std::size_t i = mask.size() - 1; i > 0; --i) std::swap(mask[i], mask[perm_rng.index(i + 1)]);
    result.null_statistics[p] = pool.statistic(mask);
  });
  const auto exceed = std::count_if(result.null_statistics.begin(), result.null_statistics.end(),
                                    [&](double v) { return v >= result.statistic; });
  result.p_value = (1.0 + static_cast<double>(exceed)) / (1.0 + static_cast<double>(permutations));
  return result;
}

// ---------------------------------------------------------------------------

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("quantile: no values");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile: q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double NearestNeighborStats::fraction_below(double radius) const {
  if (distances.empty()) return 0.0;
  const auto below = std::count_if(distances.begin(), distances.end(),
                                   [radius](double v) { return v < radius; });
  return static_cast<double>(below) / static_cast<double>(distances.size());
}

NearestNeighborStats nn_distance_stats(const PointSet& generated, const Dataset& dataset) {
  if (generated.empty()) throw DomainError("nn_distance_stats: no generated points");
  if (generated.dim() != dataset.dim()) throw DomainError("nn_distance_stats: dimension mismatch");
  NearestNeighborStats out;
  out.distances.resize(generated.size());
  out.indices.resize(generated.size());
  for (std::size_t j = 0; j < generated.size(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const double sq = squared_distance(generated[j], dataset[i]);
      if (sq < best) {
        best = sq;
        best_i = i;
      }
    }
    out.distances[j] = std::sqrt(best);
    out.indices[j] = best_i;
  }
  out.median = median(out.distances);
  return out;
}

}  // namespace scorelab
