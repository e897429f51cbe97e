#include "hybridsim/quantum.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hybridsim {

namespace {

const Complex kI(0.0, 1.0);

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

HermitianOperator::HermitianOperator(ComplexMatrix entries) : mat_(std::move(entries)) {
  if (mat_.rows() < 1 || mat_.rows() != mat_.cols()) {
    throw std::invalid_argument("HermitianOperator: entries must be square with dim >= 1");
  }
  const double dev = (mat_ - mat_.adjoint()).cwiseAbs().maxCoeff();
  if (!(dev <= kHermiticityTol)) {
    throw std::invalid_argument("HermitianOperator: not Hermitian within 1e-12 (deviation " +
                                std::to_string(dev) + ")");
  }
}

HermitianOperator HermitianOperator::zero(Eigen::Index dim) {
  return HermitianOperator(ComplexMatrix::Zero(dim, dim));
}

HermitianOperator HermitianOperator::identity(Eigen::Index dim) {
  return HermitianOperator(ComplexMatrix::Identity(dim, dim));
}

HermitianOperator HermitianOperator::operator+(const HermitianOperator& other) const {
  require_same_dim(dim(), other.dim(), "HermitianOperator::operator+");
  return HermitianOperator(mat_ + other.mat_);
}

HermitianOperator HermitianOperator::operator-(const HermitianOperator& other) const {
  require_same_dim(dim(), other.dim(), "HermitianOperator::operator-");
  return HermitianOperator(mat_ - other.mat_);
}

HermitianOperator HermitianOperator::scaled(double factor) const {
  return HermitianOperator(factor * mat_);
}

HermitianOperator pauli(PauliAxis axis, int site, int n_sites) {
  if (n_sites < 1) throw std::invalid_argument("pauli: n_sites must be >= 1");
  if (site < 1 || site > n_sites) {
    throw std::invalid_argument("pauli: site " + std::to_string(site) +
                                " out of range 1.." + std::to_string(n_sites));
  }
  ComplexMatrix sigma(2, 2);
  switch (axis) {
    case PauliAxis::X:
      sigma << 0, 1, 1, 0;
      break;
    case PauliAxis::Y:
      sigma << 0, -kI, kI, 0;
      break;
    case PauliAxis::Z:
      sigma << 1, 0, 0, -1;
      break;
  }
  ComplexMatrix result = ComplexMatrix::Identity(1, 1);
  for (int s = 1; s <= n_sites; ++s) {
    result = tensor(result, s == site ? sigma : ComplexMatrix::Identity(2, 2));
  }
  return HermitianOperator(std::move(result));
}

ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

HermitianOperator tensor(const HermitianOperator& a, const HermitianOperator& b) {
  return HermitianOperator(tensor(a.matrix(), b.matrix()));
}

QuantumState::QuantumState(ComplexVector amplitudes, bool normalized)
    : amplitudes_(std::move(amplitudes)), normalized_(normalized) {
  if (amplitudes_.size() < 1) {
    throw std::invalid_argument("QuantumState: dim must be >= 1");
  }
}

QuantumState QuantumState::normalized(ComplexVector amplitudes) {
  const double n = amplitudes.norm();
  if (!(std::abs(n - 1.0) <= kNormTol)) {
    throw std::invalid_argument("QuantumState: norm " + std::to_string(n) +
                                " deviates from 1 beyond 1e-10");
  }
  return QuantumState(std::move(amplitudes), true);
}

QuantumState QuantumState::raw(ComplexVector amplitudes) {
  return QuantumState(std::move(amplitudes), false);
}

QuantumState QuantumState::auto_flagged(ComplexVector amplitudes) {
  const bool ok = std::abs(amplitudes.norm() - 1.0) <= kNormTol;
  return QuantumState(std::move(amplitudes), ok);
}

double expectation(const HermitianOperator& op, const QuantumState& omega) {
  return expectation(op, omega.amplitudes());
}

double expectation(const HermitianOperator& op, const ComplexVector& amplitudes) {
  require_same_dim(op.dim(), amplitudes.size(), "expectation");
  const Complex value = amplitudes.dot(op.matrix() * amplitudes);
  if (!(std::abs(value.imag()) <= kHermiticityTol * std::max(1.0, std::abs(value.real())))) {
    throw std::runtime_error("expectation: imaginary residue beyond tolerance");
  }
  return value.real();
}

ComplexMatrix commutator(const HermitianOperator& a, const HermitianOperator& b) {
  require_same_dim(a.dim(), b.dim(), "commutator");
  return a.matrix() * b.matrix() - b.matrix() * a.matrix();
}

ComplexMatrix unitary_propagator(const HermitianOperator& h, double dt, double hbar) {
  if (!std::isfinite(dt)) throw std::invalid_argument("unitary_propagator: dt must be finite");
  if (!(hbar > 0.0)) throw std::invalid_argument("unitary_propagator: hbar must be > 0");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.matrix());
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("unitary_propagator: eigendecomposition failed");
  }
  const RealVector& evals = solver.eigenvalues();
  const ComplexMatrix& evecs = solver.eigenvectors();
  ComplexVector phases(evals.size());
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    phases(i) = std::exp(-kI * evals(i) * dt / hbar);
  }
  ComplexMatrix u = evecs * phases.asDiagonal() * evecs.adjoint();
  const double unitarity = (u.adjoint() * u - ComplexMatrix::Identity(u.rows(), u.cols()))
                               .cwiseAbs()
                               .maxCoeff();
  if (!(unitarity <= kHermiticityTol)) {
    throw std::runtime_error("unitary_propagator: result not unitary within 1e-12");
  }
  return u;
}

CanonicalQuantumCoords to_canonical(const QuantumState& omega) {
  const double root2 = std::sqrt(2.0);
  CanonicalQuantumCoords coords;
  coords.x = root2 * omega.amplitudes().real();
  coords.y = root2 * omega.amplitudes().imag();
  return coords;
}

QuantumState from_canonical(const CanonicalQuantumCoords& coords) {
  require_same_dim(coords.x.size(), coords.y.size(), "from_canonical");
  const double root2 = std::sqrt(2.0);
  ComplexVector amplitudes(coords.x.size());
  for (Eigen::Index i = 0; i < coords.x.size(); ++i) {
    amplitudes(i) = Complex(coords.x(i) / root2, coords.y(i) / root2);
  }
  return QuantumState::auto_flagged(std::move(amplitudes));
}

}  // namespace hybridsim
