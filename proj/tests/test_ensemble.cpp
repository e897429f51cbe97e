#include "hybridsim/ensemble.hpp"

#include "hybridsim/bracket.hpp"
#include "hybridsim/integrator.hpp"
#include "hybridsim/model.hpp"
#include "hybridsim/potential.hpp"
#include "hybridsim/quantum.hpp"
#include "hybridsim/reference_model.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

using namespace hybridsim;

namespace {

RealVector scalar_vec(double v) { return RealVector::Constant(1, v); }

QuantumState bell_state() {
  ComplexVector w(4);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  w << Complex(inv_sqrt2, 0.0), Complex(0.0, 0.0), Complex(0.0, 0.0), Complex(inv_sqrt2, 0.0);
  return QuantumState::normalized(std::move(w));
}

QuantumState basis_state(Eigen::Index dim, Eigen::Index index) {
  ComplexVector w = ComplexVector::Zero(dim);
  w(index) = Complex(1.0, 0.0);
  return QuantumState::normalized(std::move(w));
}

HybridDensitySpec delta_density(double q, double p, QuantumState omega) {
  HybridDensitySpec density;
  density.classical = DeltaClassicalDensity{scalar_vec(q), scalar_vec(p)};
  density.quantum = {QuantumMixtureComponent{1.0, std::move(omega)}};
  return density;
}

HybridDensitySpec gaussian_density(double mean_q, double mean_p, double var_q, double var_p,
                                   QuantumState omega) {
  HybridDensitySpec density;
  RealMatrix covariance = RealMatrix::Zero(2, 2);
  covariance(0, 0) = var_q;
  covariance(1, 1) = var_p;
  density.classical = GaussianClassicalDensity{scalar_vec(mean_q), scalar_vec(mean_p),
                                               covariance};
  density.quantum = {QuantumMixtureComponent{1.0, std::move(omega)}};
  return density;
}

HybridHamiltonianSpec decoupled_spec(HermitianOperator h0, PolynomialPotential v,
                                     OscillatorParams params) {
  return HybridHamiltonianSpec(std::move(h0), {},
                               ClassicalSector{std::move(v), params, 1});
}

std::vector<double> smoothed_coefficients(const PolynomialPotential& v,
                                          const OscillatorParams& params) {
  PolynomialPotential smoothed = v;
  double factor = 1.0;
  for (int k = 1; 2 * k <= v.degree(); ++k) {
    factor *= params.hbar / (4.0 * params.mass * params.Omega) / static_cast<double>(k);
    smoothed = smoothed + factor * derivative(v, 2 * k);
  }
  return smoothed.coefficients();
}

HybridObservable position_observable() {
  return HybridObservable::classical_only(PhaseSpacePolynomial::coordinate_q(1, 0));
}

HybridObservable momentum_observable() {
  return HybridObservable::classical_only(PhaseSpacePolynomial::coordinate_p(1, 0));
}

HybridObservable expectation_observable(HermitianOperator op) {
  return HybridObservable::weighted_expectation(PhaseSpacePolynomial::constant(1, 1.0),
                                                std::move(op));
}

}  // namespace

TEST_CASE("density specs validate their pieces") {
  const auto good_delta = delta_density(0.5, 0.0, basis_state(2, 0));
  CHECK_NOTHROW(good_delta.validate());

  HybridDensitySpec bad = good_delta;
  bad.classical = DeltaClassicalDensity{RealVector(), RealVector()};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = good_delta;
  bad.classical = DeltaClassicalDensity{scalar_vec(0.5), RealVector::Zero(2)};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = good_delta;
  bad.classical = DeltaClassicalDensity{scalar_vec(std::nan("")), scalar_vec(0.0)};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  const auto good_gaussian = gaussian_density(0.5, 0.0, 0.04, 0.09, basis_state(2, 0));
  CHECK_NOTHROW(good_gaussian.validate());

  bad = good_gaussian;
  {
    auto g = std::get<GaussianClassicalDensity>(bad.classical);
    g.covariance = RealMatrix::Identity(3, 3);
    bad.classical = g;
  }
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = good_gaussian;
  {
    auto g = std::get<GaussianClassicalDensity>(bad.classical);
    g.covariance(0, 1) = 0.5;  // asymmetric
    bad.classical = g;
  }
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = good_gaussian;
  {
    auto g = std::get<GaussianClassicalDensity>(bad.classical);
    g.covariance(0, 0) = -0.04;  // indefinite
    bad.classical = g;
  }
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  // Singular covariance is allowed: a delta factor in one coordinate.
  HybridDensitySpec singular = good_gaussian;
  {
    auto g = std::get<GaussianClassicalDensity>(singular.classical);
    g.covariance(1, 1) = 0.0;
    singular.classical = g;
  }
  CHECK_NOTHROW(singular.validate());

  bad = good_delta;
  bad.quantum.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = good_delta;
  bad.quantum = {QuantumMixtureComponent{-0.2, basis_state(2, 0)},
                 QuantumMixtureComponent{1.2, basis_state(2, 1)}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = good_delta;
  bad.quantum = {QuantumMixtureComponent{0.5, basis_state(2, 0)},
                 QuantumMixtureComponent{0.4, basis_state(2, 1)}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = good_delta;
  bad.quantum = {QuantumMixtureComponent{0.5, basis_state(2, 0)},
                 QuantumMixtureComponent{0.5, basis_state(3, 1)}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = good_delta;
  bad.quantum = {QuantumMixtureComponent{1.0, QuantumState::raw(ComplexVector::Constant(
                                                  2, Complex(1.0, 0.0)))}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("sampling is deterministic and honors point masses") {
  const auto density = delta_density(0.5, -0.25, bell_state());
  const auto states = sample(density, 10, 99);
  REQUIRE(states.size() == 10);
  for (const auto& state : states) {
    CHECK(state.classical.q(0) == 0.5);
    CHECK(state.classical.p(0) == -0.25);
    CHECK((state.omega.amplitudes() - bell_state().amplitudes()).norm() == 0.0);
  }

  CHECK_THROWS_AS(sample(density, 0, 99), std::invalid_argument);

  // Identical seeds replay the identical Gaussian stream.
  const auto gaussian = gaussian_density(0.5, 0.0, 0.04, 0.09, basis_state(2, 0));
  const auto a = sample(gaussian, 25, 1234);
  const auto b = sample(gaussian, 25, 1234);
  const auto c = sample(gaussian, 25, 4321);
  REQUIRE(a.size() == b.size());
  double max_seed_gap = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].classical.q(0) == b[i].classical.q(0));
    CHECK(a[i].classical.p(0) == b[i].classical.p(0));
    max_seed_gap = std::max(max_seed_gap, std::abs(a[i].classical.q(0) - c[i].classical.q(0)));
  }
  CHECK(max_seed_gap > 0.0);

  // A weight-(1, 0) mixture always draws the first component.
  HybridDensitySpec lopsided = delta_density(0.0, 0.0, basis_state(2, 0));
  lopsided.quantum = {QuantumMixtureComponent{1.0, basis_state(2, 0)},
                      QuantumMixtureComponent{0.0, basis_state(2, 1)}};
  for (const auto& state : sample(lopsided, 20, 5)) {
    CHECK((state.omega.amplitudes() - basis_state(2, 0).amplitudes()).norm() == 0.0);
  }
}

TEST_CASE("gaussian sampling reproduces the requested moments") {
  const int n = 4000;
  const double var_q = 0.04;
  const double var_p = 0.09;
  const auto density = gaussian_density(0.5, -0.2, var_q, var_p, basis_state(2, 0));
  const auto states = sample(density, n, 777);

  double mean_q = 0.0;
  double mean_p = 0.0;
  for (const auto& state : states) {
    mean_q += state.classical.q(0);
    mean_p += state.classical.p(0);
  }
  mean_q /= n;
  mean_p /= n;
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  CHECK(std::abs(mean_q - 0.5) < 4.0 * std::sqrt(var_q) / sqrt_n);
  CHECK(std::abs(mean_p - (-0.2)) < 4.0 * std::sqrt(var_p) / sqrt_n);

  double ss_q = 0.0;
  double ss_p = 0.0;
  for (const auto& state : states) {
    ss_q += (state.classical.q(0) - mean_q) * (state.classical.q(0) - mean_q);
    ss_p += (state.classical.p(0) - mean_p) * (state.classical.p(0) - mean_p);
  }
  const double var_q_hat = ss_q / (n - 1);
  const double var_p_hat = ss_p / (n - 1);
  // The variance estimator has standard deviation about var * sqrt(2/(n-1)).
  CHECK(std::abs(var_q_hat - var_q) < 5.0 * var_q * std::sqrt(2.0 / (n - 1)));
  CHECK(std::abs(var_p_hat - var_p) < 5.0 * var_p * std::sqrt(2.0 / (n - 1)));

  // Correlated covariance block.
  HybridDensitySpec correlated = density;
  {
    auto g = std::get<GaussianClassicalDensity>(correlated.classical);
    g.covariance(0, 1) = 0.03;
    g.covariance(1, 0) = 0.03;
    correlated.classical = g;
  }
  const auto corr_states = sample(correlated, n, 778);
  double cmq = 0.0;
  double cmp = 0.0;
  for (const auto& state : corr_states) {
    cmq += state.classical.q(0);
    cmp += state.classical.p(0);
  }
  cmq /= n;
  cmp /= n;
  double cross = 0.0;
  for (const auto& state : corr_states) {
    cross += (state.classical.q(0) - cmq) * (state.classical.p(0) - cmp);
  }
  cross /= (n - 1);
  const double cross_sd = std::sqrt((var_q * var_p + 0.03 * 0.03) / n);
  CHECK(std::abs(cross - 0.03) < 4.0 * cross_sd);

  // A singular covariance pins the degenerate coordinate at its mean.
  HybridDensitySpec singular = density;
  {
    auto g = std::get<GaussianClassicalDensity>(singular.classical);
    g.covariance(1, 1) = 0.0;
    singular.classical = g;
  }
  for (const auto& state : sample(singular, 200, 11)) {
    CHECK(std::abs(state.classical.p(0) - (-0.2)) < 1e-12);
  }
}

TEST_CASE("mixture sampling follows the weights") {
  HybridDensitySpec mixture = delta_density(0.0, 0.0, basis_state(2, 0));
  mixture.quantum = {QuantumMixtureComponent{0.5, basis_state(2, 0)},
                     QuantumMixtureComponent{0.5, basis_state(2, 1)}};
  const int n = 4096;
  const auto states = sample(mixture, n, 2718);
  int first = 0;
  for (const auto& state : states) {
    if ((state.omega.amplitudes() - basis_state(2, 0).amplitudes()).norm() == 0.0) ++first;
  }
  const double frequency = static_cast<double>(first) / n;
  CHECK(std::abs(frequency - 0.5) < 4.0 * 0.5 / std::sqrt(static_cast<double>(n)));

  // Without dynamics the sigma-z ensemble mean is a binomial average.
  const auto spec = decoupled_spec(HermitianOperator::zero(2),
                                   PolynomialPotential::harmonic(1.0, 1.0),
                                   OscillatorParams{1.0, 1.0, 1.0});
  IntegratorConfig still;
  still.t_final = 0.0;
  const auto trajectories = evolve_ensemble(spec, states, still);
  const auto result = estimate_observable(
      trajectories, expectation_observable(pauli(PauliAxis::Z, 1, 1)));
  REQUIRE(result.times.size() == 1);
  CHECK(std::abs(result.means[0][0]) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(result.means[0][0] - (2.0 * frequency - 1.0)) < 1e-12);
}

TEST_CASE("delta ensembles collapse onto the single trajectory") {
  const auto spec = two_qubit_oscillator();
  const auto density = delta_density(0.5, 0.0, bell_state());
  IntegratorConfig config;
  config.method = Method::Strang;
  config.dt = 1e-3;
  config.t_final = 0.1;
  config.output_stride = 10;

  const std::vector<HybridObservable> observables{
      expectation_observable(pauli(PauliAxis::Z, 1, 2)), position_observable()};

  const auto samples = sample(density, 10, 1);
  const auto trajectories = evolve_ensemble(spec, samples, config);
  const auto result = estimate_observable(trajectories, observables);

  const HybridState initial{ClassicalPoint{scalar_vec(0.5), scalar_vec(0.0)}, bell_state()};
  const auto single = integrate(spec, initial, config, observables);

  REQUIRE(result.times == single.times);
  CHECK(result.sample_count == 10);
  CHECK_FALSE(result.degenerate_samples);
  for (std::size_t j = 0; j < observables.size(); ++j) {
    for (std::size_t r = 0; r < single.times.size(); ++r) {
      // Identical characteristics make the anchored mean exact.
      CHECK(result.means[j][r] == single.observable_values[j][r]);
      CHECK(result.stderrs[j][r] == 0.0);
    }
  }
}

TEST_CASE("thread count never changes ensemble results") {
  const auto spec = two_qubit_oscillator();
  const auto density = gaussian_density(0.5, 0.0, 0.02, 0.02, bell_state());
  const auto samples = sample(density, 8, 4242);

  IntegratorConfig config;
  config.dt = 1e-3;
  config.t_final = 0.05;
  config.output_stride = 10;

  const auto serial = evolve_ensemble(spec, samples, config, 1);
  const auto parallel = evolve_ensemble(spec, samples, config, 4);
  const auto defaulted = evolve_ensemble(spec, samples, config, 0);
  REQUIRE(serial.size() == parallel.size());
  REQUIRE(serial.size() == defaulted.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    REQUIRE(serial[i].times == parallel[i].times);
    for (std::size_t r = 0; r < serial[i].times.size(); ++r) {
      CHECK(serial[i].energies[r] == parallel[i].energies[r]);
      CHECK(serial[i].energies[r] == defaulted[i].energies[r]);
      CHECK((serial[i].states[r].omega.amplitudes() -
             parallel[i].states[r].omega.amplitudes())
                .norm() == 0.0);
      CHECK((serial[i].states[r].classical.q - parallel[i].states[r].classical.q).norm() ==
            0.0);
    }
  }

  CHECK_THROWS_AS(evolve_ensemble(spec, {}, config), std::invalid_argument);
  CHECK_THROWS_AS(evolve_ensemble(spec, samples, config, -1), std::invalid_argument);
}

TEST_CASE("estimates handle constants, degenerate counts, and bad grids") {
  const auto spec = two_qubit_oscillator();
  const auto density = delta_density(0.5, 0.0, bell_state());
  IntegratorConfig config;
  config.dt = 1e-3;
  config.t_final = 0.01;

  const auto one = evolve_ensemble(spec, sample(density, 1, 3), config);
  const auto unit = HybridObservable::classical_only(PhaseSpacePolynomial::constant(1, 1.0));
  const auto single_result = estimate_observable(one, unit);
  CHECK(single_result.degenerate_samples);
  CHECK(single_result.sample_count == 1);
  for (std::size_t r = 0; r < single_result.times.size(); ++r) {
    CHECK(single_result.means[0][r] == 1.0);
    CHECK(single_result.stderrs[0][r] == 0.0);
  }

  const auto few = evolve_ensemble(spec, sample(density, 3, 3), config);
  const auto few_result = estimate_observable(few, unit);
  CHECK_FALSE(few_result.degenerate_samples);
  for (std::size_t r = 0; r < few_result.times.size(); ++r) {
    CHECK(few_result.means[0][r] == 1.0);
    CHECK(few_result.stderrs[0][r] == 0.0);
  }

  // Both overloads agree.
  const auto vector_result = estimate_observable(few, std::vector<HybridObservable>{unit});
  CHECK(vector_result.means == few_result.means);

  // Misaligned grids are rejected.
  IntegratorConfig longer = config;
  longer.t_final = 0.02;
  auto mixed = few;
  mixed.push_back(evolve_ensemble(spec, sample(density, 1, 4), longer).front());
  CHECK_THROWS_AS(estimate_observable(mixed, unit), std::invalid_argument);

  CHECK_THROWS_AS(estimate_observable({}, unit), std::invalid_argument);
  CHECK_THROWS_AS(estimate_observable(few, std::vector<HybridObservable>{}),
                  std::invalid_argument);
}

TEST_CASE("decoupled classical marginals match a classical-only ensemble") {
  std::mt19937_64 rng(13);
  const OscillatorParams params{1.1, 0.8, 0.9};
  const PolynomialPotential quartic({0.0, 0.0, 0.5, 0.0, 0.1});
  const auto spec = decoupled_spec(test_util::random_hermitian(2, rng), quartic, params);
  const auto density = gaussian_density(0.4, -0.1, 0.02, 0.05, basis_state(2, 0));

  IntegratorConfig config;
  config.method = Method::Strang;
  config.dt = 1e-3;
  config.t_final = 0.5;
  config.output_stride = 100;

  const auto samples = sample(density, 64, 5150);
  const auto trajectories = evolve_ensemble(spec, samples, config);
  const auto result = estimate_observable(
      trajectories, std::vector<HybridObservable>{position_observable(),
                                                  momentum_observable()});

  // Comparator: the same draws pushed through the classical-only splitting,
  // which is velocity Verlet on the smoothed potential.
  const auto coeffs = smoothed_coefficients(quartic, params);
  for (std::size_t r = 0; r < result.times.size(); ++r) {
    const long long steps = std::llround(result.times[r] / config.dt);
    double mean_q = 0.0;
    double mean_p = 0.0;
    for (const auto& state : samples) {
      const auto point = oracles::verlet_trajectory(coeffs, state.classical.q(0),
                                                    state.classical.p(0), params.mass,
                                                    config.dt, steps);
      mean_q += point.q;
      mean_p += point.p;
    }
    mean_q /= static_cast<double>(samples.size());
    mean_p /= static_cast<double>(samples.size());
    CHECK(std::abs(result.means[0][r] - mean_q) < 1e-10);
    CHECK(std::abs(result.means[1][r] - mean_p) < 1e-10);
  }
}

TEST_CASE("decoupled mixtures match the density-matrix computation") {
  std::mt19937_64 rng(31337);
  const double hbar = 0.8;
  const OscillatorParams params{1.0, 1.2, hbar};
  const auto h0 = test_util::random_hermitian(2, rng);
  const auto spec = decoupled_spec(h0, PolynomialPotential::harmonic(params.mass, params.Omega),
                                   params);

  const auto omega_a = test_util::random_state(2, rng);
  const auto omega_b = test_util::random_state(2, rng);
  HybridDensitySpec density = gaussian_density(0.3, 0.1, 0.04, 0.04, omega_a);
  density.quantum = {QuantumMixtureComponent{0.3, omega_a},
                     QuantumMixtureComponent{0.7, omega_b}};

  IntegratorConfig config;
  config.method = Method::Strang;
  config.dt = 1e-2;
  config.t_final = 1.0;
  config.output_stride = 25;

  const int n = 32;
  const auto samples = sample(density, n, 90210);
  const auto trajectories = evolve_ensemble(spec, samples, config);
  const auto a = test_util::random_hermitian(2, rng);
  const auto result = estimate_observable(trajectories, expectation_observable(a));

  // Empirical density matrix of the drawn components.
  ComplexMatrix rho0 = ComplexMatrix::Zero(2, 2);
  for (const auto& state : samples) {
    rho0 += state.omega.amplitudes() * state.omega.amplitudes().adjoint();
  }
  rho0 /= static_cast<double>(n);

  // Without coupling the quantum factor evolves by the bare propagator, so
  // the particle average must equal the evolved-density trace.
  for (std::size_t r = 0; r < result.times.size(); ++r) {
    const ComplexMatrix u = unitary_propagator(h0, result.times[r], hbar);
    const ComplexMatrix rho_t = u * rho0 * u.adjoint();
    const double expected = (rho_t * a.matrix()).trace().real();
    CHECK(std::abs(result.means[0][r] - expected) < 1e-10);
  }
}

TEST_CASE("narrow gaussians converge to the central trajectory") {
  const auto spec = two_qubit_oscillator();
  IntegratorConfig config;
  config.method = Method::Strang;
  config.dt = 1e-2;
  config.t_final = 1.0;
  config.output_stride = 25;

  const HybridState central{ClassicalPoint{scalar_vec(0.5), scalar_vec(0.0)}, bell_state()};
  const auto central_record = integrate(spec, central, config, {position_observable()});
  const double central_q = central_record.observable_values[0].back();

  double previous = 0.0;
  bool first = true;
  for (const double variance : {1e-2, 1e-4, 1e-6}) {
    const auto density = gaussian_density(0.5, 0.0, variance, variance, bell_state());
    const auto samples = sample(density, 16, 606);
    const auto trajectories = evolve_ensemble(spec, samples, config);
    const auto result = estimate_observable(trajectories, position_observable());
    const double error = std::abs(result.means[0].back() - central_q);
    if (!first) CHECK(error < previous);
    first = false;
    previous = error;
  }
  CHECK(previous < 5e-3);
}

TEST_CASE("every characteristic conserves energy") {
  const auto spec = two_qubit_oscillator();
  const auto density = gaussian_density(0.5, 0.0, 0.02, 0.02, bell_state());
  IntegratorConfig config;
  config.method = Method::Strang;
  config.dt = 1e-3;
  config.t_final = 0.5;
  config.output_stride = 50;

  const auto trajectories = evolve_ensemble(spec, sample(density, 8, 8080), config);
  double mean_first = 0.0;
  double mean_last = 0.0;
  for (const auto& trajectory : trajectories) {
    CHECK(conservation_report(trajectory).max_energy_drift < 1e-6);
    mean_first += trajectory.energies.front();
    mean_last += trajectory.energies.back();
  }
  mean_first /= static_cast<double>(trajectories.size());
  mean_last /= static_cast<double>(trajectories.size());
  CHECK(std::abs(mean_last - mean_first) < 1e-6 * std::abs(mean_first));
}

TEST_CASE("ensemble evolution propagates integrator failures") {
  const auto spec = decoupled_spec(HermitianOperator::zero(2),
                                   PolynomialPotential({0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0}),
                                   OscillatorParams{1.0, 1.0, 1.0});
  const auto density = delta_density(2.0, 0.0, basis_state(2, 0));
  IntegratorConfig config;
  config.method = Method::Rk4;
  config.dt = 5e-2;
  config.t_final = 5.0;
  CHECK_THROWS_AS(evolve_ensemble(spec, sample(density, 3, 6), config, 3), std::runtime_error);
}
