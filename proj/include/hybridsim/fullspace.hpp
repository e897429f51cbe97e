#pragma once

#include "hybridsim/model.hpp"

#include <stdexcept>

namespace hybridsim {

/// Maximum admissible coherent tail weight beyond the kept Fock levels.
constexpr double kTailTol = 1e-10;

/// Thrown when a requested coherent state does not fit the kept levels;
/// carries the smallest level count that would.
class TruncationError : public std::runtime_error {
 public:
  TruncationError(const std::string& what, int suggested_levels)
      : std::runtime_error(what), suggested_levels_(suggested_levels) {}
  int suggested_levels() const { return suggested_levels_; }

 private:
  int suggested_levels_ = 0;
};

/// Number of kept Fock levels of the oscillator sector.
struct FockTruncation {
  explicit FockTruncation(int levels);
  int levels;
};

/// Product vector on the truncated oscillator (x) quantum subsystem space,
/// indexed oscillator-major: amplitudes[n * quantum_dim + i].
struct CompositeState {
  ComplexVector amplitudes;
  int levels = 0;
  Eigen::Index quantum_dim = 0;

  /// Throws on inconsistent sizes or norm off 1 beyond 1e-10.
  void validate() const;
};

/// Exact tail weight sum_{n>=levels} |c_n|^2 of the untruncated coherent
/// state at (q, p); a Poisson tail in |alpha|^2.
double coherent_tail_weight(double q, double p, const OscillatorParams& params, int levels);

/// Smallest level count whose tail weight is at most tol.
int suggest_truncation(double q, double p, const OscillatorParams& params,
                       double tol = kTailTol);

/// Minimal uncertainty state c_n = e^{-|a|^2/2} a^n / sqrt(n!) with
/// a = (m Omega q + i p) / sqrt(2 m Omega hbar), renormalized after
/// truncation. Throws TruncationError when the tail exceeds kTailTol.
ComplexVector coherent_state(double q, double p, const OscillatorParams& params,
                             FockTruncation truncation);

/// Truncated ladder operator, a|n> = sqrt(n)|n-1>.
ComplexMatrix lowering_matrix(int levels);
/// q = sqrt(hbar / (2 m Omega)) (a + a^dag) on the kept levels.
ComplexMatrix position_matrix(int levels, const OscillatorParams& params);
/// p = i sqrt(m Omega hbar / 2) (a^dag - a) on the kept levels.
ComplexMatrix momentum_matrix(int levels, const OscillatorParams& params);

/// Tensor product coherent(q, p) (x) omega.
CompositeState compose_constrained_state(double q, double p, const QuantumState& omega,
                                         const OscillatorParams& params,
                                         FockTruncation truncation);

/// Partial inner product <q,p| psi: the quantum-subsystem vector left after
/// contracting the oscillator factor with the coherent state. Not
/// renormalized; its norm is 1 only when psi lies over (q, p).
ComplexVector reduce_composite_state(const CompositeState& psi, double q, double p,
                                     const OscillatorParams& params);

/// Total dispersion of the oscillator quadratures X = q sqrt(m Omega / hbar),
/// P = p / sqrt(m Omega hbar) in psi, minus the minimum 1. Zero exactly on
/// product states with a minimal uncertainty oscillator factor.
double fluctuation_functional(const CompositeState& psi, const OscillatorParams& params);

/// Full composite realization I (x) H0 + sum_j f_j(q) (x) A_j
/// + (p^2/2m + V(q)) (x) I with q, p the truncated matrices. Single
/// classical DOF only.
HermitianOperator build_composite_hamiltonian(const HybridHamiltonianSpec& spec,
                                              FockTruncation truncation);

/// <q,p| H |q,p>: the quantum-subsystem operator left after contracting the
/// oscillator sector of a composite operator with the coherent state.
ComplexMatrix partial_coherent_expectation(const ComplexMatrix& composite_op, double q,
                                           double p, const OscillatorParams& params,
                                           Eigen::Index quantum_dim);

/// |q,p><q,p| (x) <q,p| H |q,p>. The constrained flow is generated by this
/// operator rather than by H itself.
HermitianOperator build_h_alpha(const HermitianOperator& composite_h, double q, double p,
                                const OscillatorParams& params, Eigen::Index quantum_dim);

/// |<psi| [A (x) I, H] |psi>| for an oscillator-sector operator A. Vanishes
/// on constrained product states when H is the projected generator.
double commutator_vanishing_check(const ComplexMatrix& oscillator_op,
                                  const ComplexMatrix& composite_op,
                                  const CompositeState& psi);

}  // namespace hybridsim
