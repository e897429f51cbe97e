#include "hybridsim/integrator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hybridsim {

void IntegratorConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("IntegratorConfig: dt must be > 0");
  if (!(t_final >= 0.0)) throw std::invalid_argument("IntegratorConfig: t_final must be >= 0");
  if (t_final > 0.0 && dt > t_final) {
    throw std::invalid_argument("IntegratorConfig: dt must not exceed t_final");
  }
  if (output_stride < 1) throw std::invalid_argument("IntegratorConfig: stride must be >= 1");
}

namespace {

struct RawState {
  RealVector q;
  RealVector p;
  ComplexVector omega;
};

RawState raw_step_strang(const HybridHamiltonianSpec& spec, const RawState& state, double dt,
                         const StepOptions& options) {
  const double mass = spec.classical().params.mass;
  const double hbar = spec.hbar();
  if (!(hbar > 0.0)) throw std::invalid_argument("step_strang: quantum sector requires hbar > 0");

  RawState s = state;
  s.p -= 0.5 * dt * classical_gradients(spec, s.q, s.p, s.omega).dHdq;
  s.q += (0.5 * dt / mass) * s.p;
  ComplexMatrix u = unitary_propagator(effective_quantum_hamiltonian(spec, s.q), dt, hbar);
  if (options.include_gauge_phase) {
    const ClassicalGradients grads = classical_gradients(spec, s.q, s.p, s.omega);
    const double phase_rate = 0.5 * (s.q.dot(grads.dHdq) + s.p.dot(grads.dHdp));
    u *= std::exp(Complex(0.0, -phase_rate * dt / hbar));
  }
  s.omega = u * s.omega;
  s.q += (0.5 * dt / mass) * s.p;
  s.p -= 0.5 * dt * classical_gradients(spec, s.q, s.p, s.omega).dHdq;
  return s;
}

RawState raw_step_rk4(const HybridHamiltonianSpec& spec, const RawState& state, double dt,
                      const StepOptions& options) {
  auto rhs = [&spec, &options](const RawState& s) {
    const EomRhs r = eom_rhs(spec, s.q, s.p, s.omega, options.include_gauge_phase);
    return RawState{r.dq, r.dp, r.domega};
  };
  auto advanced = [](const RawState& s, const RawState& k, double factor) {
    return RawState{s.q + factor * k.q, s.p + factor * k.p, s.omega + factor * k.omega};
  };

  const RawState k1 = rhs(state);
  const RawState k2 = rhs(advanced(state, k1, 0.5 * dt));
  const RawState k3 = rhs(advanced(state, k2, 0.5 * dt));
  const RawState k4 = rhs(advanced(state, k3, dt));

  RawState out;
  out.q = state.q + (dt / 6.0) * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q);
  out.p = state.p + (dt / 6.0) * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
  out.omega = state.omega + (dt / 6.0) * (k1.omega + 2.0 * k2.omega + 2.0 * k3.omega + k4.omega);
  if (options.renormalize) {
    out.omega /= out.omega.norm();
  }
  return out;
}

RawState to_raw(const HybridState& state) {
  return RawState{state.classical.q, state.classical.p, state.omega.amplitudes()};
}

HybridState from_raw(RawState raw) {
  return HybridState{ClassicalPoint{std::move(raw.q), std::move(raw.p)},
                     QuantumState::auto_flagged(std::move(raw.omega))};
}

bool all_finite(const RawState& s) {
  return s.q.allFinite() && s.p.allFinite() && s.omega.allFinite();
}

}  // namespace

HybridState step_strang(const HybridHamiltonianSpec& spec, const HybridState& state, double dt,
                        const StepOptions& options) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_strang: dt must be > 0");
  return from_raw(raw_step_strang(spec, to_raw(state), dt, options));
}

HybridState step_rk4(const HybridHamiltonianSpec& spec, const HybridState& state, double dt,
                     const StepOptions& options) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_rk4: dt must be > 0");
  return from_raw(raw_step_rk4(spec, to_raw(state), dt, options));
}

TrajectoryRecord integrate(const HybridHamiltonianSpec& spec, const HybridState& initial,
                           const IntegratorConfig& config,
                           const std::vector<HybridObservable>& observables,
                           const StepOptions& options) {
  config.validate();
  initial.classical.validate();

  const long total_steps = config.t_final > 0.0
                               ? static_cast<long>(std::llround(config.t_final / config.dt))
                               : 0;

  TrajectoryRecord record;
  record.observable_values.resize(observables.size());

  RawState state = to_raw(initial);
  auto record_point = [&](long step) {
    record.times.push_back(static_cast<double>(step) * config.dt);
    record.states.push_back(from_raw(state));
    record.energies.push_back(hamiltonian_value(spec, state.q, state.p, state.omega));
    record.norms.push_back(state.omega.norm());
    for (std::size_t j = 0; j < observables.size(); ++j) {
      record.observable_values[j].push_back(observables[j].evaluate(state.q, state.p, state.omega));
    }
  };

  record_point(0);
  for (long step = 1; step <= total_steps; ++step) {
    // A diverging trajectory can surface as an evaluation failure inside the
    // stepper before the finite-range guard sees the state; either way the
    // report carries the step index.
    try {
      state = (config.method == Method::Strang)
                  ? raw_step_strang(spec, state, config.dt, options)
                  : raw_step_rk4(spec, state, config.dt, options);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(std::string(e.what()) + " at step " + std::to_string(step));
    }
    if (!all_finite(state)) {
      throw std::runtime_error("integrate: non-finite state at step " + std::to_string(step));
    }
    if (step % config.output_stride == 0 || step == total_steps) {
      record_point(step);
    }
  }
  return record;
}

ConservationReport conservation_report(const TrajectoryRecord& trajectory) {
  if (trajectory.times.empty()) {
    throw std::invalid_argument("conservation_report: empty trajectory");
  }
  ConservationReport report;
  const double h0 = trajectory.energies.front();
  const double scale = std::max(std::abs(h0), 1e-12);
  for (std::size_t r = 0; r < trajectory.times.size(); ++r) {
    report.max_energy_drift =
        std::max(report.max_energy_drift, std::abs(trajectory.energies[r] - h0) / scale);
    report.max_norm_drift =
        std::max(report.max_norm_drift, std::abs(trajectory.norms[r] - 1.0));
  }
  return report;
}

}  // namespace hybridsim
