#include "hybridsim/integrator.hpp"

#include "hybridsim/bracket.hpp"
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
#include <string>
#include <vector>

using namespace hybridsim;

namespace {

RealVector scalar_vec(double v) { return RealVector::Constant(1, v); }

HybridState make_state(double q, double p, QuantumState omega) {
  return HybridState{ClassicalPoint{scalar_vec(q), scalar_vec(p)}, std::move(omega)};
}

HybridState bell_initial(double q, double p) {
  ComplexVector w(4);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  w << Complex(inv_sqrt2, 0.0), Complex(0.0, 0.0), Complex(0.0, 0.0), Complex(inv_sqrt2, 0.0);
  return make_state(q, p, QuantumState::normalized(std::move(w)));
}

/// Spec with an empty coupling list, so the classical and quantum sectors
/// evolve independently.
HybridHamiltonianSpec decoupled_spec(HermitianOperator h0, PolynomialPotential v,
                                     OscillatorParams params) {
  return HybridHamiltonianSpec(std::move(h0), {},
                               ClassicalSector{std::move(v), params, 1});
}

/// Coefficients of the effective classical potential, with the even-derivative
/// corrections folded in. The splitting integrator kicks with the derivative
/// of exactly this polynomial.
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

double state_distance(const HybridState& a, const HybridState& b) {
  return (a.classical.q - b.classical.q).norm() + (a.classical.p - b.classical.p).norm() +
         (a.omega.amplitudes() - b.omega.amplitudes()).norm();
}

/// Momentum flip plus amplitude conjugation. For real symmetric operators this
/// conjugates the flow direction, so a reversible stepper composed with it
/// walks a trajectory backwards.
HybridState time_reversed(const HybridState& state) {
  return HybridState{ClassicalPoint{state.classical.q, -state.classical.p},
                     QuantumState::auto_flagged(state.omega.amplitudes().conjugate())};
}

}  // namespace

TEST_CASE("integrator config validation") {
  IntegratorConfig config;
  config.dt = 1e-3;
  config.t_final = 1.0;
  config.output_stride = 10;
  CHECK_NOTHROW(config.validate());

  config.t_final = 0.0;
  CHECK_NOTHROW(config.validate());

  IntegratorConfig bad = config;
  bad.dt = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.dt = -1e-3;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = config;
  bad.t_final = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = config;
  bad.dt = 2.0;
  bad.t_final = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = config;
  bad.output_stride = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  const auto spec = two_qubit_oscillator();
  const auto state = bell_initial(0.5, 0.0);
  CHECK_THROWS_AS(step_strang(spec, state, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(step_strang(spec, state, -1e-3), std::invalid_argument);
  CHECK_THROWS_AS(step_rk4(spec, state, 0.0), std::invalid_argument);
}

TEST_CASE("splitting step preserves the quantum norm to roundoff") {
  const auto spec = two_qubit_oscillator();
  HybridState state = bell_initial(0.5, 0.0);

  const HybridState once = step_strang(spec, state, 1e-2);
  CHECK(std::abs(once.omega.norm() - 1.0) < 1e-15);

  IntegratorConfig config;
  config.method = Method::Strang;
  config.dt = 1e-3;
  config.t_final = 5.0;
  config.output_stride = 50;
  const auto record = integrate(spec, state, config);
  const auto report = conservation_report(record);
  CHECK(report.max_norm_drift < 1e-13);
}

TEST_CASE("constant quantum hamiltonian evolves by the exact propagator") {
  std::mt19937_64 rng(7);
  const OscillatorParams params{1.0, 1.0, 0.7};
  const auto h0 = test_util::random_hermitian(2, rng);
  const auto spec = decoupled_spec(h0, PolynomialPotential::harmonic(1.0, 1.0), params);
  const auto omega0 = test_util::random_state(2, rng);

  // Ten coarse steps compose to the propagator for the whole interval; the
  // quantum sub-flow is exact at any dt once the coupling vanishes.
  const double dt = 0.3;
  HybridState state = make_state(0.4, -0.2, omega0);
  for (int s = 0; s < 10; ++s) state = step_strang(spec, state, dt);
  const ComplexMatrix u = oracles::two_level_propagator(h0.matrix(), 10 * dt, params.hbar);
  CHECK((state.omega.amplitudes() - u * omega0.amplitudes()).norm() < 1e-12);

  // The gauge phase multiplies the quantum state by a scalar only.
  StepOptions gauge;
  gauge.include_gauge_phase = true;
  HybridState gauged = make_state(0.4, -0.2, omega0);
  for (int s = 0; s < 10; ++s) gauged = step_strang(spec, gauged, dt, gauge);
  const Complex overlap = gauged.omega.amplitudes().dot(state.omega.amplitudes());
  CHECK(std::abs(std::abs(overlap) - 1.0) < 1e-12);
  CHECK((gauged.classical.q - state.classical.q).norm() < 1e-12);
  CHECK((gauged.classical.p - state.classical.p).norm() < 1e-12);
}

TEST_CASE("decoupled classical sector reproduces velocity verlet") {
  const OscillatorParams params{1.3, 0.9, 0.6};
  const PolynomialPotential quartic({0.0, 0.0, 0.5, 0.0, 0.1});
  const auto spec = decoupled_spec(HermitianOperator::zero(2), quartic, params);

  ComplexVector w0(2);
  w0 << Complex(1.0, 0.0), Complex(0.0, 0.0);
  HybridState state = make_state(0.8, -0.3, QuantumState::normalized(w0));

  const double dt = 1e-3;
  const long long steps = 1000;
  for (long long s = 0; s < steps; ++s) state = step_strang(spec, state, dt);

  const auto oracle = oracles::verlet_trajectory(smoothed_coefficients(quartic, params), 0.8,
                                                 -0.3, params.mass, dt, steps);
  CHECK(std::abs(state.classical.q(0) - oracle.q) < 1e-9);
  CHECK(std::abs(state.classical.p(0) - oracle.p) < 1e-9);
  // No coupling and a zero operator leave the quantum state untouched.
  CHECK((state.omega.amplitudes() - w0).norm() < 1e-12);
}

TEST_CASE("splitting converges at second order on the harmonic oscillator") {
  const OscillatorParams params{1.0, 1.4, 1.0};
  const auto spec = decoupled_spec(
      HermitianOperator::zero(2), PolynomialPotential::harmonic(params.mass, params.Omega),
      params);
  ComplexVector w0(2);
  w0 << Complex(0.0, 0.0), Complex(1.0, 0.0);

  const double t = 1.0;
  const auto flow_error = [&](double dt) {
    HybridState state = make_state(1.0, 0.5, QuantumState::normalized(w0));
    const long long steps = std::llround(t / dt);
    for (long long s = 0; s < steps; ++s) state = step_strang(spec, state, dt);
    const auto exact = oracles::harmonic_flow(1.0, 0.5, params.mass, params.Omega, t);
    return std::abs(state.classical.q(0) - exact.q) + std::abs(state.classical.p(0) - exact.p);
  };

  const double coarse = flow_error(1e-2);
  const double fine = flow_error(5e-3);
  REQUIRE(coarse > 1e-8);
  const double ratio = coarse / fine;
  CHECK(ratio > 3.4);
  CHECK(ratio < 4.6);
}

TEST_CASE("methods self-converge at their design orders on the coupled model") {
  const auto spec = two_qubit_oscillator();
  const HybridState initial = bell_initial(0.5, 0.0);
  const double t = 0.5;

  const auto run = [&](Method method, double dt) {
    IntegratorConfig config;
    config.method = method;
    config.dt = dt;
    config.t_final = t;
    config.output_stride = 1 << 20;  // endpoints only
    const auto record = integrate(spec, initial, config);
    return record.states.back();
  };

  const HybridState reference = run(Method::Rk4, 1e-4);

  const double rk4_coarse = state_distance(run(Method::Rk4, 2e-2), reference);
  const double rk4_fine = state_distance(run(Method::Rk4, 1e-2), reference);
  REQUIRE(rk4_coarse > 1e-12);
  const double rk4_ratio = rk4_coarse / rk4_fine;
  CHECK(rk4_ratio > 12.0);
  CHECK(rk4_ratio < 20.0);

  const double strang_coarse = state_distance(run(Method::Strang, 2e-2), reference);
  const double strang_fine = state_distance(run(Method::Strang, 1e-2), reference);
  REQUIRE(strang_coarse > 1e-10);
  const double strang_ratio = strang_coarse / strang_fine;
  CHECK(strang_ratio > 3.4);
  CHECK(strang_ratio < 4.6);

  // Cross-method agreement at matching dt is second order, the lower of the
  // two truncation orders.
  const double cross = state_distance(run(Method::Strang, 1e-2), run(Method::Rk4, 1e-2));
  CHECK(cross < 10.0 * 1e-4);
}

TEST_CASE("splitting trajectories reverse to the initial state") {
  const auto spec = two_qubit_oscillator();
  const HybridState initial = bell_initial(0.5, 0.0);
  const double dt = 1e-3;
  const int steps = 500;

  HybridState state = initial;
  for (int s = 0; s < steps; ++s) state = step_strang(spec, state, dt);
  state = time_reversed(state);
  for (int s = 0; s < steps; ++s) state = step_strang(spec, state, dt);
  state = time_reversed(state);

  CHECK(state_distance(state, initial) < 1e-9);
}

TEST_CASE("integration records stride points and both endpoints") {
  const auto spec = two_qubit_oscillator();
  const HybridState initial = bell_initial(0.5, 0.0);

  const auto sz1 = HybridObservable::weighted_expectation(
      PhaseSpacePolynomial::constant(1, 1.0), pauli(PauliAxis::Z, 1, 2));
  const auto position = HybridObservable::classical_only(
      PhaseSpacePolynomial::coordinate_q(1, 0));

  IntegratorConfig config;
  config.dt = 1e-3;
  config.t_final = 10e-3;
  config.output_stride = 3;
  const auto record = integrate(spec, initial, config, {sz1, position});

  // Steps 0, 3, 6, 9 by stride, plus the forced final step 10.
  REQUIRE(record.times.size() == 5);
  const long expected_steps[] = {0, 3, 6, 9, 10};
  for (std::size_t r = 0; r < record.times.size(); ++r) {
    CHECK(record.times[r] == static_cast<double>(expected_steps[r]) * config.dt);
    if (r > 0) CHECK(record.times[r] > record.times[r - 1]);
  }
  REQUIRE(record.states.size() == 5);
  REQUIRE(record.energies.size() == 5);
  REQUIRE(record.norms.size() == 5);
  REQUIRE(record.observable_values.size() == 2);
  REQUIRE(record.observable_values[0].size() == 5);
  REQUIRE(record.observable_values[1].size() == 5);

  CHECK(record.energies[0] == hamiltonian_value(spec, initial));
  CHECK(record.observable_values[0][0] == sz1.evaluate(initial));
  CHECK(record.observable_values[1][0] == initial.classical.q(0));

  // Zero-length runs record exactly the initial point.
  IntegratorConfig still;
  still.t_final = 0.0;
  const auto single = integrate(spec, initial, still, {sz1});
  REQUIRE(single.times.size() == 1);
  CHECK(single.times[0] == 0.0);
  CHECK(single.observable_values[0][0] == sz1.evaluate(initial));
}

TEST_CASE("integration aborts with the step index when the state blows up") {
  // Inverted sextic potential: the classical coordinate reaches overflow
  // within a handful of coarse steps.
  const OscillatorParams params{1.0, 1.0, 1.0};
  const auto spec = decoupled_spec(HermitianOperator::zero(2),
                                   PolynomialPotential({0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0}),
                                   params);
  ComplexVector w0(2);
  w0 << Complex(1.0, 0.0), Complex(0.0, 0.0);
  const HybridState initial = make_state(2.0, 0.0, QuantumState::normalized(w0));

  IntegratorConfig config;
  config.method = Method::Rk4;
  config.dt = 5e-2;
  config.t_final = 5.0;
  try {
    integrate(spec, initial, config);
    FAIL("expected a non-finite abort");
  } catch (const std::runtime_error& error) {
    CHECK(std::string(error.what()).find("non-finite state at step") != std::string::npos);
  }
}

TEST_CASE("gauge phase changes nothing observable along splitting runs") {
  const auto spec = two_qubit_oscillator();
  const auto sz1 = pauli(PauliAxis::Z, 1, 2);
  const double dt = 1e-3;
  const int steps = 200;

  HybridState plain = bell_initial(0.5, 0.0);
  HybridState gauged = plain;
  StepOptions gauge;
  gauge.include_gauge_phase = true;
  for (int s = 0; s < steps; ++s) {
    plain = step_strang(spec, plain, dt);
    gauged = step_strang(spec, gauged, dt, gauge);
  }

  CHECK((gauged.classical.q - plain.classical.q).norm() < 1e-12);
  CHECK((gauged.classical.p - plain.classical.p).norm() < 1e-12);
  CHECK(std::abs(expectation(sz1, gauged.omega) - expectation(sz1, plain.omega)) < 1e-12);
  const Complex overlap = gauged.omega.amplitudes().dot(plain.omega.amplitudes());
  CHECK(std::abs(std::abs(overlap) - 1.0) < 1e-12);

  // The generic stepper keeps expectations gauge independent to its own
  // truncation order.
  HybridState rk_plain = bell_initial(0.5, 0.0);
  HybridState rk_gauged = rk_plain;
  for (int s = 0; s < steps; ++s) {
    rk_plain = step_rk4(spec, rk_plain, dt);
    rk_gauged = step_rk4(spec, rk_gauged, dt, gauge);
  }
  CHECK(std::abs(expectation(sz1, rk_gauged.omega) - expectation(sz1, rk_plain.omega)) < 1e-8);
}

TEST_CASE("conservation report tracks energy and norm drift") {
  const auto spec = two_qubit_oscillator();
  const HybridState initial = bell_initial(0.5, 0.0);

  IntegratorConfig config;
  config.method = Method::Strang;
  config.dt = 1e-3;
  config.t_final = 5.0;
  config.output_stride = 10;
  const auto strang_report = conservation_report(integrate(spec, initial, config));
  CHECK(strang_report.max_energy_drift < 1e-5);
  CHECK(strang_report.max_norm_drift < 1e-13);

  config.method = Method::Rk4;
  const auto rk4_report = conservation_report(integrate(spec, initial, config));
  CHECK(rk4_report.max_energy_drift < 1e-7);
  CHECK(rk4_report.max_norm_drift < 1e-10);

  // Single-record trajectories report zero energy drift and the raw norm gap.
  ComplexVector off(4);
  off << Complex(1.001, 0.0), Complex(0.0, 0.0), Complex(0.0, 0.0), Complex(0.0, 0.0);
  const HybridState unnormalized = make_state(0.5, 0.0, QuantumState::raw(off));
  IntegratorConfig still;
  still.t_final = 0.0;
  const auto single = conservation_report(integrate(spec, unnormalized, still));
  CHECK(single.max_energy_drift == 0.0);
  CHECK(std::abs(single.max_norm_drift - 0.001) < 1e-12);

  CHECK_THROWS_AS(conservation_report(TrajectoryRecord{}), std::invalid_argument);
}

TEST_CASE("rk4 norm drift scales at fifth order and renormalization is opt-in") {
  const auto spec = two_qubit_oscillator();
  const HybridState initial = bell_initial(0.5, 0.0);

  const auto drift_at = [&](double dt, bool renormalize) {
    IntegratorConfig config;
    config.method = Method::Rk4;
    config.dt = dt;
    config.t_final = 1.0;
    config.output_stride = 5;
    StepOptions options;
    options.renormalize = renormalize;
    return conservation_report(integrate(spec, initial, config, {}, options)).max_norm_drift;
  };

  // The stability function of the classical Runge-Kutta scheme satisfies
  // |R(i theta)|^2 = 1 - theta^6/72 + O(theta^8), so the per-step norm defect
  // is sixth order and the accumulated drift over a fixed horizon is fifth
  // order: halving dt divides the drift by about 32.
  const double coarse = drift_at(2e-2, false);
  const double fine = drift_at(1e-2, false);
  REQUIRE(coarse > 1e-12);
  REQUIRE(fine > 1e-14);
  const double ratio = coarse / fine;
  CHECK(ratio > 24.0);
  CHECK(ratio < 40.0);

  CHECK(drift_at(2e-2, true) < 1e-14);
}
