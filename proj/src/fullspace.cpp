#include "hybridsim/fullspace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hybridsim {

namespace {

using RowMajorComplex =
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Oscillator-major amplitudes viewed as a levels x quantum_dim matrix.
Eigen::Map<const RowMajorComplex> as_matrix(const CompositeState& psi) {
  return {psi.amplitudes.data(), psi.levels, psi.quantum_dim};
}

Complex coherent_alpha(double q, double p, const OscillatorParams& params) {
  params.validate();
  if (params.hbar <= 0.0) {
    throw std::invalid_argument("coherent states need hbar > 0");
  }
  const double denom = std::sqrt(2.0 * params.mass * params.Omega * params.hbar);
  return {params.mass * params.Omega * q / denom, p / denom};
}

/// Poisson(lambda) tail sum_{n>=levels} e^{-lambda} lambda^n / n!. Above the
/// mode the excluded terms decrease, so summing them forward keeps small
/// tails at full precision; at or below the mode the tail is order 1 and the
/// complement of the (tiny, possibly underflowing) head is accurate instead.
double poisson_tail(double lambda, int levels) {
  if (lambda == 0.0) return 0.0;
  if (static_cast<double>(levels) <= lambda) {
    double term = std::exp(-lambda);
    double head = 0.0;
    for (int n = 0; n < levels; ++n) {
      head += term;
      term *= lambda / (static_cast<double>(n) + 1.0);
    }
    return std::max(0.0, 1.0 - head);
  }
  double term = std::exp(static_cast<double>(levels) * std::log(lambda) - lambda -
                         std::lgamma(static_cast<double>(levels) + 1.0));
  double tail = 0.0;
  for (int n = levels; term > 0.0; ++n) {
    tail += term;
    if (term < tail * 1e-18) break;
    term *= lambda / (static_cast<double>(n) + 1.0);
  }
  return tail;
}

ComplexMatrix polynomial_of_matrix(const PolynomialPotential& poly, const ComplexMatrix& m) {
  const Eigen::Index dim = m.rows();
  ComplexMatrix result = ComplexMatrix::Zero(dim, dim);
  const auto& coeffs = poly.coefficients();
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
    result = result * m;
    result.diagonal().array() += *it;
  }
  return result;
}

}  // namespace

FockTruncation::FockTruncation(int levels_in) : levels(levels_in) {
  if (levels < 2) throw std::invalid_argument("need at least 2 oscillator levels");
}

void CompositeState::validate() const {
  if (levels < 2 || quantum_dim < 1 ||
      amplitudes.size() != static_cast<Eigen::Index>(levels) * quantum_dim) {
    throw std::invalid_argument("composite amplitudes do not match levels * quantum_dim");
  }
  if (std::abs(amplitudes.norm() - 1.0) > kNormTol) {
    throw std::invalid_argument("composite state is not normalized");
  }
}

double coherent_tail_weight(double q, double p, const OscillatorParams& params, int levels) {
  if (levels < 1) throw std::invalid_argument("levels must be positive");
  return poisson_tail(std::norm(coherent_alpha(q, p, params)), levels);
}

int suggest_truncation(double q, double p, const OscillatorParams& params, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const double lambda = std::norm(coherent_alpha(q, p, params));
  constexpr int kMaxLevels = 1 << 16;
  for (int levels = 2; levels <= kMaxLevels; levels = std::max(levels + 1, levels * 5 / 4)) {
    if (poisson_tail(lambda, levels) <= tol) {
      // Geometric probe overshoots; walk back to the smallest adequate count.
      while (levels > 2 && poisson_tail(lambda, levels - 1) <= tol) --levels;
      return levels;
    }
  }
  throw std::invalid_argument("no admissible truncation below " + std::to_string(kMaxLevels) +
                              " levels");
}

ComplexVector coherent_state(double q, double p, const OscillatorParams& params,
                             FockTruncation truncation) {
  const Complex alpha = coherent_alpha(q, p, params);
  const double lambda = std::norm(alpha);
  const double tail = poisson_tail(lambda, truncation.levels);
  if (tail > kTailTol) {
    throw TruncationError("coherent tail weight " + std::to_string(tail) + " at " +
                              std::to_string(truncation.levels) + " levels; need at least " +
                              std::to_string(suggest_truncation(q, p, params)),
                          suggest_truncation(q, p, params));
  }
  ComplexVector c(truncation.levels);
  c[0] = std::exp(-0.5 * lambda);
  for (int n = 1; n < truncation.levels; ++n) {
    c[n] = c[n - 1] * alpha / std::sqrt(static_cast<double>(n));
  }
  c /= c.norm();
  return c;
}

ComplexMatrix lowering_matrix(int levels) {
  if (levels < 2) throw std::invalid_argument("need at least 2 oscillator levels");
  ComplexMatrix a = ComplexMatrix::Zero(levels, levels);
  for (int n = 1; n < levels; ++n) {
    a(n - 1, n) = std::sqrt(static_cast<double>(n));
  }
  return a;
}

ComplexMatrix position_matrix(int levels, const OscillatorParams& params) {
  params.validate();
  if (params.hbar <= 0.0) throw std::invalid_argument("position matrix needs hbar > 0");
  const ComplexMatrix a = lowering_matrix(levels);
  return std::sqrt(params.hbar / (2.0 * params.mass * params.Omega)) *
         (a + a.adjoint()).eval();
}

ComplexMatrix momentum_matrix(int levels, const OscillatorParams& params) {
  params.validate();
  if (params.hbar <= 0.0) throw std::invalid_argument("momentum matrix needs hbar > 0");
  const ComplexMatrix a = lowering_matrix(levels);
  return Complex(0.0, 1.0) * std::sqrt(params.mass * params.Omega * params.hbar / 2.0) *
         (a.adjoint() - a).eval();
}

CompositeState compose_constrained_state(double q, double p, const QuantumState& omega,
                                         const OscillatorParams& params,
                                         FockTruncation truncation) {
  const ComplexVector c = coherent_state(q, p, params, truncation);
  const Eigen::Index d = omega.dim();
  CompositeState psi;
  psi.levels = truncation.levels;
  psi.quantum_dim = d;
  psi.amplitudes.resize(c.size() * d);
  for (int n = 0; n < truncation.levels; ++n) {
    psi.amplitudes.segment(n * d, d) = c[n] * omega.amplitudes();
  }
  return psi;
}

ComplexVector reduce_composite_state(const CompositeState& psi, double q, double p,
                                     const OscillatorParams& params) {
  psi.validate();
  const ComplexVector c = coherent_state(q, p, params, FockTruncation(psi.levels));
  return as_matrix(psi).transpose() * c.conjugate();
}

double fluctuation_functional(const CompositeState& psi, const OscillatorParams& params) {
  psi.validate();
  params.validate();
  if (params.hbar <= 0.0) {
    throw std::invalid_argument("fluctuation functional needs hbar > 0");
  }
  // The dimensionless quadratures reduce to (a + a^dag)/sqrt(2) and
  // i(a^dag - a)/sqrt(2) in the Fock basis for any oscillator scale.
  const ComplexMatrix a = lowering_matrix(psi.levels);
  const ComplexMatrix x = (a + a.adjoint()) / std::sqrt(2.0);
  const ComplexMatrix pq = Complex(0.0, 1.0) * (a.adjoint() - a) / std::sqrt(2.0);

  const auto block = as_matrix(psi);
  double excess = -1.0;
  for (const ComplexMatrix& quad : {x, pq}) {
    const RowMajorComplex applied = quad * block;
    const double mean = (block.conjugate().cwiseProduct(applied)).sum().real();
    excess += applied.squaredNorm() - mean * mean;
  }
  return excess;
}

HermitianOperator build_composite_hamiltonian(const HybridHamiltonianSpec& spec,
                                              FockTruncation truncation) {
  if (spec.classical_dof() != 1) {
    throw std::invalid_argument("composite realization supports one classical DOF");
  }
  const Eigen::Index d = spec.quantum_dim();
  const int n = truncation.levels;
  const ComplexMatrix qmat = position_matrix(n, spec.classical().params);
  const ComplexMatrix pmat = momentum_matrix(n, spec.classical().params);
  const ComplexMatrix osc_identity = ComplexMatrix::Identity(n, n);
  const ComplexMatrix sub_identity = ComplexMatrix::Identity(d, d);

  ComplexMatrix h = tensor(osc_identity, spec.h0().matrix());
  // Couplings lift as f(q_hat). The coherent expectation of f(q_hat) equals
  // f(q) only for affine f; higher-degree coefficients pick up O(hbar)
  // smoothing terms, so cross-layer energy comparisons are exact only for
  // couplings of degree <= 1.
  for (const auto& term : spec.couplings()) {
    h += tensor(polynomial_of_matrix(term.coefficient.front(), qmat), term.op.matrix());
  }
  ComplexMatrix classical = pmat * pmat / (2.0 * spec.classical().params.mass);
  classical += polynomial_of_matrix(spec.classical().V, qmat);
  h += tensor(classical, sub_identity);
  return HermitianOperator(h);
}

ComplexMatrix partial_coherent_expectation(const ComplexMatrix& composite_op, double q,
                                           double p, const OscillatorParams& params,
                                           Eigen::Index quantum_dim) {
  if (quantum_dim < 1 || composite_op.rows() != composite_op.cols() ||
      composite_op.rows() % quantum_dim != 0) {
    throw std::invalid_argument("operator dimension is not a multiple of quantum_dim");
  }
  const int levels = static_cast<int>(composite_op.rows() / quantum_dim);
  const ComplexVector c = coherent_state(q, p, params, FockTruncation(levels));
  ComplexMatrix result = ComplexMatrix::Zero(quantum_dim, quantum_dim);
  for (int n = 0; n < levels; ++n) {
    for (int m = 0; m < levels; ++m) {
      result += std::conj(c[n]) * c[m] *
                composite_op.block(n * quantum_dim, m * quantum_dim, quantum_dim, quantum_dim);
    }
  }
  return result;
}

HermitianOperator build_h_alpha(const HermitianOperator& composite_h, double q, double p,
                                const OscillatorParams& params, Eigen::Index quantum_dim) {
  const ComplexMatrix expectation =
      partial_coherent_expectation(composite_h.matrix(), q, p, params, quantum_dim);
  const int levels = static_cast<int>(composite_h.dim() / quantum_dim);
  const ComplexVector c = coherent_state(q, p, params, FockTruncation(levels));
  const ComplexMatrix projector = c * c.adjoint();
  return HermitianOperator(tensor(projector, expectation));
}

double commutator_vanishing_check(const ComplexMatrix& oscillator_op,
                                  const ComplexMatrix& composite_op,
                                  const CompositeState& psi) {
  psi.validate();
  if (oscillator_op.rows() != psi.levels || oscillator_op.cols() != psi.levels) {
    throw std::invalid_argument("oscillator operator does not match the kept levels");
  }
  if (composite_op.rows() != psi.amplitudes.size() ||
      composite_op.cols() != psi.amplitudes.size()) {
    throw std::invalid_argument("composite operator does not match the state");
  }
  // <psi|[A (x) I, H]|psi> = 2i Im <A psi | H psi> for Hermitian A, H.
  const auto block = as_matrix(psi);
  const RowMajorComplex a_psi = oscillator_op * block;
  const ComplexVector h_psi = composite_op * psi.amplitudes;
  const Eigen::Map<const ComplexVector> a_flat(a_psi.data(), a_psi.size());
  return 2.0 * std::abs(a_flat.dot(h_psi).imag());
}

}  // namespace hybridsim
