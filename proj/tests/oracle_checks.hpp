#pragma once

// Randomised oracle suites shared by the unit tests and the acceptance binary.
// Each returns the number of failing instances out of `total`.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "scorelab/estimators.hpp"
#include "scorelab/ou.hpp"
#include "scorelab/scores.hpp"
#include "test_support.hpp"

namespace tsupport {

struct SuiteResult {
  std::size_t failures = 0;
  std::size_t total = 0;
  std::string first_failure;

  void record(bool ok, const std::string& what) {
    ++total;
    if (!ok && failures++ == 0) first_failure = what;
  }
};

// s(t, x) = A x + b + c * tanh(x), coefficients O(1).
inline ScoreField random_field(Rng& rng, std::size_t dim) {
  std::vector<double> a(dim * dim), b(dim), c(dim);
  for (double& v : a) v = 0.5 * rng.normal();
  for (double& v : b) v = rng.normal();
  for (double& v : c) v = rng.normal();
  return ScoreField(ScoreKind::custom, dim,
                    [=](double, std::span<const double> x, std::span<double> out) {
                      for (std::size_t i = 0; i < dim; ++i) {
                        double s = b[i] + c[i] * std::tanh(x[i]);
                        for (std::size_t j = 0; j < dim; ++j) s += a[i * dim + j] * x[j];
                        out[i] = s;
                      }
                    });
}

// base + eps * phi with phi(x)_i = amp_i * sin(w_i . x + phase_i), |phi_i| <= 1.
inline ScoreField perturbed(const ScoreField& base, double eps, Rng& rng) {
  const std::size_t dim = base.dim();
  std::vector<double> amp(dim), w(dim * dim), phase(dim);
  for (double& v : amp) v = rng.uniform();
  for (double& v : w) v = rng.normal();
  for (double& v : phase) v = 6.283185307179586 * rng.uniform();
  return ScoreField(ScoreKind::custom, dim,
                    [=](double t, std::span<const double> x, std::span<double> out) {
                      base.eval_into(t, x, out);
                      for (std::size_t i = 0; i < dim; ++i) {
                        double arg = phase[i];
                        for (std::size_t j = 0; j < dim; ++j) arg += w[i * dim + j] * x[j];
                        out[i] += eps * amp[i] * std::sin(arg);
                      }
                    });
}

inline SuiteResult empirical_score_fd_suite(std::uint64_t seed, std::size_t instances = 200) {
  Rng rng(seed);
  SuiteResult r;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t n = 1 + rng.index(20), d = 1 + rng.index(5);
    const auto data = random_dataset(rng, n, d, 2.0);
    const double t = 0.01 + 4.99 * rng.uniform();
    const auto x = forward_sample(data[rng.index(n)], t, rng);
    const auto fd = fd_gradient([&](auto z) { return empirical_mixture_log_density(data, t, z); },
                                x, 1e-3 * coefficients(t).sigma);
    r.record(close_vectors(empirical_optimal_score(data)(t, x), fd, 1e-5),
             "empirical instance " + std::to_string(i));
  }
  return r;
}

inline SuiteResult exact_score_fd_suite(std::uint64_t seed, std::size_t instances = 200) {
  Rng rng(seed);
  SuiteResult r;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t d = 1 + rng.index(5);
    const IsotropicGaussianTarget target{random_point(rng, d, 3.0), 0.1 + 10 * rng.uniform()};
    const double t = 0.01 + 4.99 * rng.uniform();
    const auto m = gaussian_marginal(target, t);
    const auto x = random_point(rng, d, 3.0);
    const auto fd = fd_gradient(
        [&](auto z) { return isotropic_gaussian_log_density(z, m.mean, m.variance); }, x,
        1e-3 * std::sqrt(m.variance));
    r.record(close_vectors(exact_gaussian_score(target)(t, x), fd, 1e-6),
             "exact instance " + std::to_string(i));
  }
  return r;
}

// CSM and SM loss differences of random field pairs agree within 3 combined SE.
inline SuiteResult paired_loss_identity_suite(std::uint64_t seed, std::size_t pairs = 20,
                                              std::size_t mc = 20000) {
  Rng rng(seed);
  SuiteResult r;
  for (std::size_t i = 0; i < pairs; ++i) {
    const std::size_t d = 1 + rng.index(3);
    const IsotropicGaussianTarget target{random_point(rng, d, 2.0), 0.2 + 3 * rng.uniform()};
    const double t = 0.05 + 2.95 * rng.uniform();
    const auto s1 = random_field(rng, d);
    const auto s2 = random_field(rng, d);
    Rng draws(rng.next_u64());
    Rng copy = draws;
    const auto csm = csm_loss_difference(s1, s2, target, t, mc, draws);
    const auto sm = sm_loss_difference(s1, s2, target, t, mc, copy);
    const double se = std::hypot(csm.std_error, sm.std_error);
    std::ostringstream what;
    what << "pair " << i << ": csm diff " << csm.value << ", sm diff " << sm.value << ", se " << se;
    r.record(std::abs(csm.value - sm.value) <= 3 * se, what.str());
  }
  return r;
}

// L^N_CSM(s^N) <= L^N_CSM(s^N + eps phi) for random bounded phi, shared draws.
inline SuiteResult erm_optimality_suite(std::uint64_t seed, std::size_t perturbations = 20,
                                        std::size_t mc = 2000) {
  Rng rng(seed);
  SuiteResult r;
  const auto data = random_dataset(rng, 25, 2, 2.0);
  const auto sn = empirical_optimal_score(data);
  for (std::size_t i = 0; i < perturbations; ++i) {
    const double t = 0.02 + 2 * rng.uniform();
    for (double eps : {0.1, 1.0}) {
      const auto other = perturbed(sn, eps, rng);
      Rng draws(rng.next_u64());
      Rng copy = draws;
      const double base = csm_loss(sn, data, t, mc, draws).value;
      const double alt = csm_loss(other, data, t, mc, copy).value;
      std::ostringstream what;
      what << "perturbation " << i << " eps " << eps << ": " << base << " > " << alt;
      r.record(base <= alt, what.str());
    }
  }
  return r;
}

// tv_mc against trapezoid quadrature on random two-component 1-D mixtures.
inline SuiteResult tv_agreement_suite(std::uint64_t seed, std::size_t pairs = 10,
                                      std::size_t mc = 100000) {
  Rng rng(seed);
  SuiteResult r;
  struct Mix {
    double w, m1, v1, m2, v2;
    double log_density(double x) const {
      const Point p{x};
      const double a = std::log(w) + isotropic_gaussian_log_density(p, Point{m1}, v1);
      const double b = std::log1p(-w) + isotropic_gaussian_log_density(p, Point{m2}, v2);
      const double hi = std::max(a, b);
      return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
    }
    void sample(Rng& g, std::span<double> out) const {
      out[0] = g.uniform() < w ? m1 + std::sqrt(v1) * g.normal() : m2 + std::sqrt(v2) * g.normal();
    }
  };
  const auto random_mix = [&] {
    return Mix{0.2 + 0.6 * rng.uniform(), 3 * rng.normal(), 0.2 + 2 * rng.uniform(),
               3 * rng.normal(), 0.2 + 2 * rng.uniform()};
  };
  for (std::size_t i = 0; i < pairs; ++i) {
    const Mix f = random_mix(), g = random_mix();
    const LogDensity lf{1, [&](std::span<const double> x) { return f.log_density(x[0]); }};
    const LogDensity lg{1, [&](std::span<const double> x) { return g.log_density(x[0]); }};
    const auto mix = equal_mixture([&](Rng& q, std::span<double> o) { f.sample(q, o); },
                                   [&](Rng& q, std::span<double> o) { g.sample(q, o); });
    Rng draws(rng.next_u64());
    const auto mc_est = tv_mc(lf, lg, mix, mc, draws);
    const double quad = tv_quadrature_1d(lf, lg, -30.0, 30.0, 200001);
    std::ostringstream what;
    what << "pair " << i << ": mc " << mc_est.value << " +- " << mc_est.std_error << ", quad " << quad;
    r.record(std::abs(mc_est.value - quad) <= 3 * mc_est.std_error, what.str());
  }
  return r;
}

}  // namespace tsupport
