#include "hybridsim/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hybridsim {

void ClassicalPoint::validate() const {
  if (q.size() != p.size()) {
    throw std::invalid_argument("ClassicalPoint: q and p must have equal length");
  }
  if (q.size() < 1) throw std::invalid_argument("ClassicalPoint: needs at least one DOF");
  if (!q.allFinite() || !p.allFinite()) {
    throw std::invalid_argument("ClassicalPoint: entries must be finite");
  }
}

double CouplingTerm::evaluate(const RealVector& q) const {
  double value = 1.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    value *= coefficient[static_cast<std::size_t>(i)](q(i));
  }
  return value;
}

double CouplingTerm::gradient(const RealVector& q, int i) const {
  double value = 1.0;
  for (Eigen::Index l = 0; l < q.size(); ++l) {
    const auto& factor = coefficient[static_cast<std::size_t>(l)];
    value *= (l == i) ? derivative(factor)(q(l)) : factor(q(l));
  }
  return value;
}

HybridHamiltonianSpec::HybridHamiltonianSpec(HermitianOperator h0,
                                             std::vector<CouplingTerm> couplings,
                                             ClassicalSector classical)
    : h0_(std::move(h0)), couplings_(std::move(couplings)), classical_(std::move(classical)) {
  if (classical_.dof < 1) {
    throw std::invalid_argument("HybridHamiltonianSpec: classical DOF count must be >= 1");
  }
  classical_.params.validate();
  for (const auto& term : couplings_) {
    if (term.op.dim() != h0_.dim()) {
      throw std::invalid_argument("HybridHamiltonianSpec: coupling operator dim mismatch");
    }
    if (term.coefficient.size() != static_cast<std::size_t>(classical_.dof)) {
      throw std::invalid_argument(
          "HybridHamiltonianSpec: coupling coefficient needs one factor per classical DOF");
    }
  }
}

HermitianOperator effective_quantum_hamiltonian(const HybridHamiltonianSpec& spec,
                                                const RealVector& q) {
  if (q.size() != spec.classical_dof()) {
    throw std::invalid_argument("effective_quantum_hamiltonian: q length must equal DOF count");
  }
  ComplexMatrix h = spec.h0().matrix();
  for (const auto& term : spec.couplings()) {
    h += term.evaluate(q) * term.op.matrix();
  }
  return HermitianOperator(std::move(h));
}

namespace {

void require_state_dims(const HybridHamiltonianSpec& spec, const RealVector& q,
                        const RealVector& p, const ComplexVector& omega) {
  if (q.size() != spec.classical_dof() || p.size() != spec.classical_dof()) {
    throw std::invalid_argument("hybrid state: classical dimension mismatch");
  }
  if (omega.size() != spec.quantum_dim()) {
    throw std::invalid_argument("hybrid state: quantum dimension mismatch");
  }
}

}  // namespace

double hamiltonian_value(const HybridHamiltonianSpec& spec, const HybridState& state,
                         bool include_kinetic_fluctuation) {
  return hamiltonian_value(spec, state.classical.q, state.classical.p,
                           state.omega.amplitudes(), include_kinetic_fluctuation);
}

double hamiltonian_value(const HybridHamiltonianSpec& spec, const RealVector& q,
                         const RealVector& p, const ComplexVector& omega,
                         bool include_kinetic_fluctuation) {
  require_state_dims(spec, q, p, omega);
  double value = expectation(effective_quantum_hamiltonian(spec, q), omega);
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    value += h_osc(q(i), p(i), spec.classical().V, spec.classical().params,
                   include_kinetic_fluctuation);
  }
  return value;
}

ClassicalGradients classical_gradients(const HybridHamiltonianSpec& spec,
                                       const HybridState& state) {
  return classical_gradients(spec, state.classical.q, state.classical.p,
                             state.omega.amplitudes());
}

ClassicalGradients classical_gradients(const HybridHamiltonianSpec& spec, const RealVector& q,
                                       const RealVector& p, const ComplexVector& omega) {
  require_state_dims(spec, q, p, omega);
  const int k = spec.classical_dof();
  ClassicalGradients grads{RealVector::Zero(k), RealVector::Zero(k)};
  const PolynomialPotential v_eff_prime = derivative(spec.classical().V);
  for (int i = 0; i < k; ++i) {
    double dq = coherent_expectation(v_eff_prime, q(i), spec.classical().params);
    for (const auto& term : spec.couplings()) {
      dq += term.gradient(q, i) * expectation(term.op, omega);
    }
    grads.dHdq(i) = dq;
    grads.dHdp(i) = p(i) / spec.classical().params.mass;
  }
  return grads;
}

EomRhs eom_rhs(const HybridHamiltonianSpec& spec, const HybridState& state,
               bool include_gauge_phase) {
  return eom_rhs(spec, state.classical.q, state.classical.p, state.omega.amplitudes(),
                 include_gauge_phase);
}

EomRhs eom_rhs(const HybridHamiltonianSpec& spec, const RealVector& q, const RealVector& p,
               const ComplexVector& omega, bool include_gauge_phase) {
  const double hbar = spec.hbar();
  if (!(hbar > 0.0)) {
    throw std::invalid_argument("eom_rhs: quantum sector requires hbar > 0");
  }
  const ClassicalGradients grads = classical_gradients(spec, q, p, omega);
  EomRhs rhs;
  rhs.dq = grads.dHdp;
  rhs.dp = -grads.dHdq;
  const Complex minus_i_over_hbar(0.0, -1.0 / hbar);
  rhs.domega = minus_i_over_hbar * (effective_quantum_hamiltonian(spec, q).matrix() * omega);
  if (include_gauge_phase) {
    const double phase_rate = 0.5 * (q.dot(grads.dHdq) + p.dot(grads.dHdp));
    rhs.domega += minus_i_over_hbar * phase_rate * omega;
  }
  return rhs;
}

double gauge_phase_term(const HybridHamiltonianSpec& spec, const HybridState& state) {
  const ClassicalGradients grads = classical_gradients(spec, state);
  return 0.5 * (state.classical.q.dot(grads.dHdq) + state.classical.p.dot(grads.dHdp));
}

}  // namespace hybridsim
