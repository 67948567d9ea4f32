#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "scorelab/estimators.hpp"
#include "scorelab/ou.hpp"
#include "scorelab/scores.hpp"
#include "test_support.hpp"

using namespace scorelab;
using tsupport::close_vectors;
using tsupport::fd_gradient;

namespace {

const IsotropicGaussianTarget kReferenceTarget{{-5.0, 5.0}, 10.0};

Dataset points_1d(std::initializer_list<double> values) {
  PointSet pts(1, 0);
  for (double v : values) pts.push_back(Point{v});
  return Dataset(std::move(pts));
}

}  // namespace

// -- Gaussian target ----------------------------------------------------------

TEST(GaussianMarginal, ReferenceTargetAtLn2) {
  const auto m = gaussian_marginal(kReferenceTarget, std::log(2.0));
  EXPECT_NEAR(m.mean[0], -2.5, 1e-14);
  EXPECT_NEAR(m.mean[1], 2.5, 1e-14);
  EXPECT_NEAR(m.variance, 3.25, 1e-13);
}

TEST(GaussianMarginal, Limits) {
  const auto late = gaussian_marginal(kReferenceTarget, 60.0);
  EXPECT_NEAR(late.mean[0], 0.0, 1e-20);
  EXPECT_DOUBLE_EQ(late.variance, 1.0);
  const auto early = gaussian_marginal(kReferenceTarget, 1e-12);
  EXPECT_NEAR(early.mean[0], -5.0, 1e-10);
  EXPECT_NEAR(early.variance, 10.0, 1e-9);
  EXPECT_THROW(gaussian_marginal(kReferenceTarget, 0.0), DomainError);
}

TEST(GaussianTarget, RejectsBadParameters) {
  EXPECT_THROW((IsotropicGaussianTarget{{0.0}, 0.0}.validate()), DomainError);
  EXPECT_THROW((IsotropicGaussianTarget{{}, 1.0}.validate()), DomainError);
  EXPECT_THROW(exact_gaussian_score(IsotropicGaussianTarget{{0.0}, -1.0}), DomainError);
}

TEST(ExactGaussianScore, ReferenceTargetAtOrigin) {
  const auto s = exact_gaussian_score(kReferenceTarget)(std::log(2.0), Point{0.0, 0.0});
  EXPECT_NEAR(s[0], -2.5 / 3.25, 1e-14);
  EXPECT_NEAR(s[1], 2.5 / 3.25, 1e-14);
  EXPECT_NEAR(s[0], -0.7692, 1e-4);
}

TEST(ExactGaussianScore, VanishesAtMarginalMean) {
  const auto score = exact_gaussian_score(kReferenceTarget);
  const auto m = gaussian_marginal(kReferenceTarget, 0.8);
  const auto s = score(0.8, m.mean);
  EXPECT_NEAR(s[0], 0.0, 1e-14);
  EXPECT_NEAR(s[1], 0.0, 1e-14);
}

TEST(ExactGaussianScore, SingularAtZeroTime) {
  EXPECT_THROW(exact_gaussian_score(kReferenceTarget)(0.0, Point{0.0, 0.0}), SingularityError);
}

TEST(ExactGaussianScore, MatchesFiniteDifferenceOfLogMarginal) {
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    const std::size_t d = 1 + rng.index(5);
    const IsotropicGaussianTarget target{tsupport::random_point(rng, d, 3.0), 0.1 + 10 * rng.uniform()};
    const double t = 0.01 + 4.99 * rng.uniform();
    const auto m = gaussian_marginal(target, t);
    const auto x = tsupport::random_point(rng, d, 3.0);
    const auto fd = fd_gradient(
        [&](auto z) { return isotropic_gaussian_log_density(z, m.mean, m.variance); }, x,
        1e-3 * std::sqrt(m.variance));
    EXPECT_TRUE(close_vectors(exact_gaussian_score(target)(t, x), fd, 1e-6)) << "instance " << i;
  }
}

TEST(SampleDataset, TaggedAndReproducible) {
  const auto a = sample_dataset(kReferenceTarget, 50, 77);
  const auto b = sample_dataset(kReferenceTarget, 50, 77);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.seed(), 77u);
  EXPECT_EQ(a.source(), DatasetSource::synthetic_gaussian);
  EXPECT_NE(a, sample_dataset(kReferenceTarget, 50, 78));
  EXPECT_THROW(sample_dataset(kReferenceTarget, 0, 1), DomainError);
}

// -- softmax weights -----------------------------------------------------------

TEST(SoftmaxWeights, SinglePointHasUnitWeight) {
  const auto w = softmax_weights(points_1d({3.0}), 0.5, Point{-2.0});
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0], 1.0);
}

TEST(SoftmaxWeights, SymmetricPair) {
  const auto w = softmax_weights(points_1d({-1.0, 1.0}), 0.3, Point{0.0});
  EXPECT_DOUBLE_EQ(w[0], 0.5);
  EXPECT_DOUBLE_EQ(w[1], 0.5);
}

TEST(SoftmaxWeights, SmallTimeSelectsNearestPoint) {
  const auto data = points_1d({-1.0, 0.2, 0.5, 2.0});
  const auto w = softmax_weights(data, 1e-4, Point{0.3});
  // Oracle: the log-kernel gap to the runner-up is thousands of nats.
  const double mu = coefficients(1e-4).mu, var = coefficients(1e-4).variance();
  const double gap = (std::pow(0.3 - mu * 0.5, 2) - std::pow(0.3 - mu * 0.2, 2)) / (2 * var);
  ASSERT_GT(gap, 40.0);
  EXPECT_NEAR(w[1], 1.0, 1e-15);
  EXPECT_EQ(w[0], 0.0);
  EXPECT_EQ(w[3], 0.0);
}

TEST(SoftmaxWeights, SumToOneAndPermutationEquivariant) {
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 1 + rng.index(20), d = 1 + rng.index(5);
    const auto data = tsupport::random_dataset(rng, n, d, 2.0);
    const auto x = tsupport::random_point(rng, d, 2.0);
    const double t = 0.01 + 3 * rng.uniform();
    const auto w = softmax_weights(data, t, x);
    double sum = 0.0;
    for (double v : w) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);

    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = n - 1 - k;
    PointSet reversed(d, 0);
    for (auto k : order) reversed.push_back(data[k]);
    const auto wr = softmax_weights(Dataset(reversed), t, x);
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(wr[k], w[order[k]], 1e-14);
  }
}

TEST(SoftmaxWeights, AllKernelsUnderflowingIsAnInternalError) {
  EXPECT_THROW(softmax_weights(points_1d({0.0, 1.0}), 1.0, Point{1e200}), std::logic_error);
}

// -- empirical optimal score -------------------------------------------------

TEST(EmpiricalOptimalScore, SinglePointEqualsConditionalScore) {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const std::size_t d = 1 + rng.index(4);
    const auto y = tsupport::random_point(rng, d, 2.0);
    const auto s = empirical_optimal_score(Dataset(PointSet::from_rows({y})));
    const auto x = tsupport::random_point(rng, d, 3.0);
    const double t = 0.01 + 4 * rng.uniform();
    const auto expected = conditional_score(x, y, t);
    const auto got = s(t, x);
    for (std::size_t k = 0; k < d; ++k) EXPECT_NEAR(got[k], expected[k], 1e-12 * (1 + std::abs(expected[k])));
  }
}

TEST(EmpiricalOptimalScore, SymmetricPairVanishesAtOrigin) {
  const auto s = empirical_optimal_score(points_1d({-1.0, 1.0}))(0.4, Point{0.0});
  EXPECT_NEAR(s[0], 0.0, 1e-15);
}

TEST(EmpiricalOptimalScore, SingularAtZeroTime) {
  EXPECT_THROW(empirical_optimal_score(points_1d({1.0}))(0.0, Point{0.0}), SingularityError);
  EXPECT_THROW(empirical_optimal_score(points_1d({1.0}))(-0.5, Point{0.0}), SingularityError);
}

TEST(EmpiricalOptimalScore, EqualsWeightedAverageOfConditionalScores) {
  Rng rng(12);
  const auto data = tsupport::random_dataset(rng, 15, 3, 2.0);
  const auto s = empirical_optimal_score(data);
  for (int i = 0; i < 50; ++i) {
    const auto x = tsupport::random_point(rng, 3, 2.0);
    const double t = 0.05 + 2 * rng.uniform();
    const auto w = softmax_weights(data, t, x);
    Point direct(3, 0.0);
    for (std::size_t j = 0; j < data.size(); ++j) {
      const auto u = conditional_score(x, data[j], t);
      for (int k = 0; k < 3; ++k) direct[k] += w[j] * u[k];
    }
    EXPECT_TRUE(close_vectors(s(t, x), direct, 1e-11));
  }
}

TEST(EmpiricalOptimalScore, MatchesFiniteDifferenceOfMixtureLogDensity) {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 1 + rng.index(20), d = 1 + rng.index(5);
    const auto data = tsupport::random_dataset(rng, n, d, 2.0);
    const double t = 0.01 + 4.99 * rng.uniform();
    const auto c = coefficients(t);
    auto x = forward_sample(data[rng.index(n)], t, rng);
    const auto fd = fd_gradient([&](auto z) { return empirical_mixture_log_density(data, t, z); }, x,
                                1e-3 * c.sigma);
    EXPECT_TRUE(close_vectors(empirical_optimal_score(data)(t, x), fd, 1e-5)) << "instance " << i;
  }
}

TEST(EmpiricalOptimalScore, InvariantUnderDuplicatingDataset) {
  Rng rng(6);
  const auto data = tsupport::random_dataset(rng, 12, 2, 2.0);
  PointSet doubled = data.points();
  for (std::size_t i = 0; i < data.size(); ++i) doubled.push_back(data[i]);
  const auto s1 = empirical_optimal_score(data);
  const auto s2 = empirical_optimal_score(Dataset(doubled));
  for (int i = 0; i < 50; ++i) {
    const auto x = tsupport::random_point(rng, 2, 2.0);
    const double t = 0.01 + 3 * rng.uniform();
    EXPECT_TRUE(close_vectors(s1(t, x), s2(t, x), 1e-12));
  }
}

TEST(EmpiricalOptimalScore, DescriptorNamesKind) {
  const auto s = empirical_optimal_score(points_1d({1.0, 2.0}));
  EXPECT_EQ(s.kind(), ScoreKind::empirical_optimal);
  EXPECT_EQ(s.descriptor(), "empirical-optimal(N=2)");
}

// -- mixture log-density -------------------------------------------------------

TEST(MixtureLogDensity, SinglePointIsTransitionDensity) {
  const Point y{0.7, -1.2};
  const Dataset data(PointSet::from_rows({y}));
  const Point x{0.1, 0.4};
  EXPECT_NEAR(empirical_mixture_log_density(data, 0.6, x), transition_log_density(x, y, 0.6), 1e-13);
}

TEST(MixtureLogDensity, IntegratesToOne) {
  const auto data = points_1d({-3.0, 0.5, 2.0, 2.2});
  const double t = 0.2;
  const std::size_t n = 200001;
  const double lo = -12, hi = 12, h = (hi - lo) / (n - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::exp(empirical_mixture_log_density(data, t, Point{lo + h * i}));
    sum += (i == 0 || i + 1 == n) ? 0.5 * v : v;
  }
  EXPECT_NEAR(sum * h, 1.0, 1e-9);
}

TEST(MixtureLogDensity, DominantComponentAtSmallTime) {
  const auto data = points_1d({-4.0, 0.0, 4.0});
  const double t = 1e-3;
  const auto c = coefficients(t);
  const double expected = std::log(1.0 / 3.0) - 0.5 * std::log(2 * std::numbers::pi * c.variance());
  EXPECT_NEAR(empirical_mixture_log_density(data, t, Point{c.mu * 4.0}), expected, 1e-9);
}

TEST(MixtureLogDensity, NonPositiveTimeThrows) {
  EXPECT_THROW(empirical_mixture_log_density(points_1d({0.0}), 0.0, Point{0.0}), DomainError);
}

// -- Gaussian convolution -------------------------------------------------------

TEST(GaussianConvolution, StandardNormals) {
  const auto g = gaussian_convolution(Point{0.0}, 1.0, Point{0.0}, 1.0);
  EXPECT_EQ(g.mean[0], 0.0);
  EXPECT_EQ(g.variance, 2.0);
}

TEST(GaussianConvolution, PointMassLimitShiftsMean) {
  const auto g = gaussian_convolution(Point{1.0, 2.0}, 3.0, Point{-4.0, 0.5}, 1e-300);
  EXPECT_EQ(g.mean[0], -3.0);
  EXPECT_EQ(g.mean[1], 2.5);
  EXPECT_EQ(g.variance, 3.0);
}

TEST(GaussianConvolution, MatchesSampledSum) {
  Rng rng(41);
  const std::size_t n = 100000;
  std::vector<double> z(n);
  for (auto& v : z) v = (1.0 + std::sqrt(2.0) * rng.normal()) + (-3.0 + std::sqrt(5.0) * rng.normal());
  const auto g = gaussian_convolution(Point{1.0}, 2.0, Point{-3.0}, 5.0);
  EXPECT_NEAR(tsupport::sample_mean(z), g.mean[0], 3 * std::sqrt(7.0 / n));
  EXPECT_NEAR(tsupport::sample_variance(z), g.variance, 3 * 7.0 * std::sqrt(2.0 / (n - 1)));
  EXPECT_EQ(g.mean[0], -2.0);
  EXPECT_EQ(g.variance, 7.0);
}

TEST(GaussianConvolution, RejectsBadInput) {
  EXPECT_THROW(gaussian_convolution(Point{0.0}, 0.0, Point{0.0}, 1.0), DomainError);
  EXPECT_THROW(gaussian_convolution(Point{0.0}, 1.0, Point{0.0}, -1.0), DomainError);
  EXPECT_THROW(gaussian_convolution(Point{0.0}, 1.0, Point{0.0, 1.0}, 1.0), DomainError);
}

// -- weighted-average bounds ----------------------------------------------------

TEST(WeightedAverageBounds, EqualPointsAttainRadiusBound) {
  const Dataset data(PointSet::from_rows(std::vector<Point>{{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}}));
  const auto b = weighted_average_bounds_check(data, 0.5, Point{0.3, -0.2});
  EXPECT_NEAR(b.lhs, 5.0, 1e-13);
  EXPECT_NEAR(b.lhs, b.bound_radius, 1e-13);
  EXPECT_TRUE(b.holds());
}

TEST(WeightedAverageBounds, SymmetricPairGivesZero) {
  const Dataset data(PointSet::from_rows(std::vector<Point>{{1.0, -1.0}, {-1.0, 1.0}}));
  const auto b = weighted_average_bounds_check(data, 0.5, Point{0.0, 0.0});
  EXPECT_NEAR(b.lhs, 0.0, 1e-30);
  EXPECT_TRUE(b.holds());
}

TEST(WeightedAverageBounds, RandomInstancesNeverViolate) {
  Rng rng(2024);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng.index(50), d = 1 + rng.index(10);
    const auto data = tsupport::random_dataset(rng, n, d, 0.5 + 3 * rng.uniform());
    const auto x = tsupport::random_point(rng, d, 4 * rng.uniform());
    const double t = 0.01 + 5 * rng.uniform();
    if (!weighted_average_bounds_check(data, t, x).holds()) ++violations;
  }
  EXPECT_EQ(violations, 0);
}

TEST(WeightedAverageBounds, RadiusBoundForScaledData) {
  Rng rng(5);
  const double radius = 2.0;
  const auto data = scale_to_radius(tsupport::random_dataset(rng, 40, 3, 5.0), radius);
  ASSERT_LE(data.max_squared_norm(), radius * radius * (1 + 1e-12));
  for (int i = 0; i < 500; ++i) {
    const auto x = tsupport::random_point(rng, 3, 5.0);
    const double t = 0.01 + 5 * rng.uniform();
    EXPECT_LE(weighted_average_bounds_check(data, t, x).lhs, radius * radius * (1 + 1e-12));
  }
}

TEST(CanonicalWeightedAverage, RandomInstancesNeverViolate) {
  Rng rng(77);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng.index(50), d = 1 + rng.index(10);
    PointSet v(d, n);
    const double scale = 0.05 + 3 * rng.uniform();
    for (std::size_t j = 0; j < n; ++j)
      for (double& c : v[j]) c = scale * rng.normal();
    const auto b = canonical_weighted_average(v);
    EXPECT_LE(b.lhs, b.rhs * (1 + 1e-12) + 1e-300);
  }
}

TEST(CanonicalWeightedAverage, HandComputedPair) {
  // y = (1), (2): weights e^-1, e^-4.
  const auto b = canonical_weighted_average(PointSet::from_rows(std::vector<Point>{{1.0}, {2.0}}));
  const double w1 = std::exp(-1.0) / (std::exp(-1.0) + std::exp(-4.0));
  const double mean = w1 * 1.0 + (1 - w1) * 2.0;
  EXPECT_NEAR(b.lhs, mean * mean, 1e-14);
  EXPECT_NEAR(b.rhs, 2.5, 1e-15);
}

TEST(MixtureLowerBound, HoldsOnRandomInstances) {
  Rng rng(13);
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 1 + rng.index(20), d = 1 + rng.index(5);
    const auto data = tsupport::random_dataset(rng, n, d, 2.0);
    const double t = 0.01 + 5 * rng.uniform();
    const auto x = tsupport::random_point(rng, d, 3.0);
    const double lambda = 1.0 / (2.0 * coefficients(t).mu);
    EXPECT_LE(mixture_log_density_lower_bound(data, t, x, lambda),
              empirical_mixture_log_density(data, t, x) + 1e-10);
  }
}

TEST(MixtureLowerBound, RejectsBadParameters) {
  const auto data = points_1d({0.0});
  EXPECT_THROW(mixture_log_density_lower_bound(data, 0.5, Point{0.0}, 0.0), DomainError);
  EXPECT_THROW(mixture_log_density_lower_bound(data, 0.0, Point{0.0}, 1.0), DomainError);
}

// -- kernel moments (variance of an ensemble mean) ------------------------------

TEST(KernelMoments, MatchesDirectSums) {
  const auto data = points_1d({-1.0, 0.5, 2.0});
  const double t = 0.4;
  const Point x{0.3};
  const auto m = kernel_moments(data, t, x);
  double dens = 0.0, ws = 0.0;
  for (double y : {-1.0, 0.5, 2.0}) {
    const double k = std::exp(transition_log_density(x, Point{y}, t));
    dens += k / 3;
    ws += y * k / 3;
  }
  EXPECT_NEAR(m.density, dens, 1e-15);
  EXPECT_NEAR(m.weighted_sum[0], ws, 1e-15);
}

TEST(KernelMoments, EnsembleVarianceScalesInverselyWithN) {
  const IsotropicGaussianTarget target{{0.5, -0.5}, 1.0};
  const double t = 0.5;
  const auto x = gaussian_marginal(target, t).mean;
  const std::vector<std::size_t> sizes{10, 100, 1000};
  std::vector<double> variances;
  for (std::size_t n : sizes) {
    std::vector<double> v0, v1;
    for (std::uint64_t r = 0; r < 400; ++r) {
      const auto m = kernel_moments(sample_dataset(target, n, derive_seed(123, {n, r})), t, x);
      v0.push_back(m.weighted_sum[0]);
      v1.push_back(m.weighted_sum[1]);
    }
    variances.push_back(tsupport::sample_variance(v0) + tsupport::sample_variance(v1));
  }
  const std::vector<double> ns(sizes.begin(), sizes.end());
  EXPECT_NEAR(loglog_fit(ns, variances).slope, -1.0, 0.15);
}
