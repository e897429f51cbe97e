#pragma once

#include "hybridsim/potential.hpp"
#include "hybridsim/quantum.hpp"

#include <vector>

namespace hybridsim {

/// k canonical pairs of the would-be-classical subsystem.
struct ClassicalPoint {
  RealVector q;
  RealVector p;

  Eigen::Index dof() const { return q.size(); }
  /// Throws unless q and p have equal length and finite entries.
  void validate() const;
};

/// One coupling term f(q) * A with f in product form over the classical DOF:
/// f(q) = prod_i coefficient[i](q_i). Coefficients depend on q only; the type
/// cannot express p-dependence, which keeps every splitting sub-flow exact.
struct CouplingTerm {
  std::vector<PolynomialPotential> coefficient;
  HermitianOperator op;

  double evaluate(const RealVector& q) const;
  /// d f / d q_i at q.
  double gradient(const RealVector& q, int i) const;
};

/// Classical sector: per-DOF potential V with shared oscillator parameters.
struct ClassicalSector {
  PolynomialPotential V;
  OscillatorParams params;
  int dof = 1;
};

/// Validated hybrid system definition: bare quantum term, couplings, and the
/// classical oscillator sector. Immutable after construction.
class HybridHamiltonianSpec {
 public:
  HybridHamiltonianSpec(HermitianOperator h0, std::vector<CouplingTerm> couplings,
                        ClassicalSector classical);

  Eigen::Index quantum_dim() const { return h0_.dim(); }
  int classical_dof() const { return classical_.dof; }
  double hbar() const { return classical_.params.hbar; }
  const HermitianOperator& h0() const { return h0_; }
  const std::vector<CouplingTerm>& couplings() const { return couplings_; }
  const ClassicalSector& classical() const { return classical_; }

 private:
  HermitianOperator h0_;
  std::vector<CouplingTerm> couplings_;
  ClassicalSector classical_;
};

/// Point of the reduced manifold: classical pair plus normalized quantum state.
struct HybridState {
  ClassicalPoint classical;
  QuantumState omega;
};

/// H0 + sum_j f_j(q) A_j. Classical-only scalars are excluded; they enter the
/// Hamilton function only through h_osc, so nothing is double-counted.
HermitianOperator effective_quantum_hamiltonian(const HybridHamiltonianSpec& spec,
                                                const RealVector& q);

/// <omega|H_eff(q)|omega> + sum_i h_osc(q_i, p_i). The kinetic fluctuation
/// constant is off by default (see h_osc).
double hamiltonian_value(const HybridHamiltonianSpec& spec, const HybridState& state,
                         bool include_kinetic_fluctuation = false);
/// Quadratic-form extension used by integrators on raw amplitude vectors.
double hamiltonian_value(const HybridHamiltonianSpec& spec, const RealVector& q,
                         const RealVector& p, const ComplexVector& omega,
                         bool include_kinetic_fluctuation = false);

struct ClassicalGradients {
  RealVector dHdq;
  RealVector dHdp;
};

/// Analytic gradients: dH/dq_i = <omega| sum_j (df_j/dq_i) A_j |omega> + d h_osc/d q_i,
/// dH/dp_i = p_i / m.
ClassicalGradients classical_gradients(const HybridHamiltonianSpec& spec, const HybridState& state);
ClassicalGradients classical_gradients(const HybridHamiltonianSpec& spec, const RealVector& q,
                                       const RealVector& p, const ComplexVector& omega);

struct EomRhs {
  RealVector dq;
  RealVector dp;
  ComplexVector domega;
};

/// Hybrid equations of motion: dq = dH/dp, dp = -dH/dq,
/// domega = (-i/hbar) H_eff(q) omega. The pure-phase gauge term is excluded
/// unless include_gauge_phase is set (diagnostic use only).
/// Throws if the model has hbar = 0: the quantum sector needs hbar > 0.
EomRhs eom_rhs(const HybridHamiltonianSpec& spec, const HybridState& state,
               bool include_gauge_phase = false);
EomRhs eom_rhs(const HybridHamiltonianSpec& spec, const RealVector& q, const RealVector& p,
               const ComplexVector& omega, bool include_gauge_phase = false);

/// Scalar phase rate (q . dH/dq + p . dH/dp) / 2 that the reduction produces
/// and gauge fixing removes. Used by the gauge-invariance test.
double gauge_phase_term(const HybridHamiltonianSpec& spec, const HybridState& state);

}  // namespace hybridsim
