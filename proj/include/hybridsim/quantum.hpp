#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace hybridsim {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

/// Max-norm tolerance for accepting a matrix as Hermitian. Inputs beyond it
/// are rejected rather than symmetrized, so a malformed model fails loudly.
inline constexpr double kHermiticityTol = 1e-12;

/// Tolerance for the unit-norm invariant of quantum states.
inline constexpr double kNormTol = 1e-10;

/// Finite-dimensional Hermitian matrix: an observable or a Hamiltonian term.
class HermitianOperator {
 public:
  /// Throws std::invalid_argument if entries are empty, non-square, or
  /// deviate from self-adjointness by more than kHermiticityTol.
  explicit HermitianOperator(ComplexMatrix entries);

  static HermitianOperator zero(Eigen::Index dim);
  static HermitianOperator identity(Eigen::Index dim);

  Eigen::Index dim() const { return mat_.rows(); }
  const ComplexMatrix& matrix() const { return mat_; }

  HermitianOperator operator+(const HermitianOperator& other) const;
  HermitianOperator operator-(const HermitianOperator& other) const;
  /// Scaling by a real factor; complex scaling would break Hermiticity.
  HermitianOperator scaled(double factor) const;

 private:
  ComplexMatrix mat_;
};

enum class PauliAxis { X, Y, Z };

/// sigma_axis acting on `site` (1-based) of an n_sites qubit register,
/// identity elsewhere. Dimension 2^n_sites.
HermitianOperator pauli(PauliAxis axis, int site, int n_sites);

/// Kronecker product, row-major block convention: (A (x) B)[i*n+k, j*n+l] = A[i,j] B[k,l].
ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b);
HermitianOperator tensor(const HermitianOperator& a, const HermitianOperator& b);

/// Amplitude vector of the quantum sector. The normalized flag records which
/// constructor was used; unnormalized vectors must be requested explicitly
/// (they are legal only in quadratic-extension contexts such as the
/// parallelogram test).
class QuantumState {
 public:
  /// Throws std::invalid_argument unless | ||v|| - 1 | <= kNormTol.
  static QuantumState normalized(ComplexVector amplitudes);
  /// Explicitly unnormalized state.
  static QuantumState raw(ComplexVector amplitudes);
  /// Flags the state as normalized iff its norm is within kNormTol of 1.
  static QuantumState auto_flagged(ComplexVector amplitudes);

  Eigen::Index dim() const { return amplitudes_.size(); }
  const ComplexVector& amplitudes() const { return amplitudes_; }
  bool is_normalized() const { return normalized_; }
  double norm() const { return amplitudes_.norm(); }

 private:
  QuantumState(ComplexVector amplitudes, bool normalized);
  ComplexVector amplitudes_;
  bool normalized_;
};

/// Real canonical chart of the quantum sector: (x_i, y_i) = sqrt(2) (Re c_i, Im c_i).
struct CanonicalQuantumCoords {
  RealVector x;
  RealVector y;
};

/// <omega|A|omega>. The imaginary residue is checked against kHermiticityTol
/// before being discarded. Throws on dimension mismatch.
double expectation(const HermitianOperator& op, const QuantumState& omega);

/// Quadratic-form extension of expectation to arbitrary amplitude vectors.
double expectation(const HermitianOperator& op, const ComplexVector& amplitudes);

/// AB - BA. Anti-Hermitian for Hermitian inputs, hence returned as a plain matrix.
ComplexMatrix commutator(const HermitianOperator& a, const HermitianOperator& b);

/// exp(-i H dt / hbar) by spectral decomposition. Exact per step; unitarity of
/// the result is verified to kHermiticityTol.
ComplexMatrix unitary_propagator(const HermitianOperator& h, double dt, double hbar);

CanonicalQuantumCoords to_canonical(const QuantumState& omega);
QuantumState from_canonical(const CanonicalQuantumCoords& coords);

}  // namespace hybridsim
