#pragma once

#include "hybridsim/model.hpp"

#include <functional>
#include <vector>

namespace hybridsim {

/// Sparse polynomial in the 2k classical canonical variables.
class PhaseSpacePolynomial {
 public:
  struct Monomial {
    double coeff = 0.0;
    std::vector<int> q_powers;  // length = dof
    std::vector<int> p_powers;  // length = dof
  };

  PhaseSpacePolynomial() = default;  // zero polynomial, dof 0
  PhaseSpacePolynomial(int dof, std::vector<Monomial> monomials);

  static PhaseSpacePolynomial zero(int dof);
  static PhaseSpacePolynomial constant(int dof, double value);
  static PhaseSpacePolynomial coordinate_q(int dof, int index);
  static PhaseSpacePolynomial coordinate_p(int dof, int index);

  int dof() const { return dof_; }
  bool is_zero() const { return monomials_.empty(); }
  const std::vector<Monomial>& monomials() const { return monomials_; }

  double operator()(const RealVector& q, const RealVector& p) const;
  PhaseSpacePolynomial derivative_q(int index) const;
  PhaseSpacePolynomial derivative_p(int index) const;

 private:
  int dof_ = 0;
  std::vector<Monomial> monomials_;
};

/// Function on the hybrid manifold of the form
///   sum_j c_j(q, p) <omega|A_j|omega> + classical_part(q, p).
/// This is the class in which mixed-state densities and the Hamilton function
/// live; the bracket of two members generally leaves it.
class HybridObservable {
 public:
  struct Term {
    PhaseSpacePolynomial coefficient;
    HermitianOperator op;
  };

  HybridObservable(std::vector<Term> terms, PhaseSpacePolynomial classical_part);

  /// Purely classical observable.
  static HybridObservable classical_only(PhaseSpacePolynomial polynomial);
  /// c(q,p) * <omega|A|omega> with a single term.
  static HybridObservable weighted_expectation(PhaseSpacePolynomial coefficient,
                                               HermitianOperator op);

  int dof() const { return classical_part_.dof(); }
  /// 0 when the observable is purely classical.
  Eigen::Index quantum_dim() const;
  const std::vector<Term>& terms() const { return terms_; }
  const PhaseSpacePolynomial& classical_part() const { return classical_part_; }

  double evaluate(const HybridState& state) const;
  /// Quadratic extension to arbitrary amplitude vectors.
  double evaluate(const RealVector& q, const RealVector& p, const ComplexVector& omega) const;

 private:
  std::vector<Term> terms_;
  PhaseSpacePolynomial classical_part_;
};

/// General function of a hybrid phase-space point, with the quantum argument
/// extended to unnormalized amplitude vectors. Bracket outputs live here:
/// they are generally not HybridObservables.
using StateFunction =
    std::function<double(const RealVector& q, const RealVector& p, const ComplexVector& omega)>;

StateFunction as_state_function(const HybridObservable& f);

/// Closed-form bracket on the reduced manifold:
///   sum_i (df1/dq_i df2/dp_i - df2/dq_i df1/dp_i)
///   + sum_{a,b} c_a(q,p) d_b(q,p) (1/i hbar) <omega|[A_a, B_b]|omega>.
/// Returns an opaque evaluator; re-representation as a HybridObservable is
/// impossible in general (the classical half produces quartic terms in omega).
StateFunction bracket_analytic(const HybridObservable& f1, const HybridObservable& f2,
                               double hbar);

/// Central-difference bracket over all canonical coordinates (q_i, p_i, x_j, y_j),
/// weighting the quantum chart block by 1/hbar. Step h must satisfy 0 < h <= 1e-3.
double bracket_numeric(const StateFunction& f1, const StateFunction& f2, const RealVector& q,
                       const RealVector& p, const ComplexVector& omega, double hbar,
                       double h = 1e-5);
double bracket_numeric(const HybridObservable& f1, const HybridObservable& f2,
                       const HybridState& state, double hbar, double h = 1e-5);

struct QuadraticityReport {
  bool quadratic = true;
  double max_violation = 0.0;
  ComplexVector witness_a;  // populated when not quadratic
  ComplexVector witness_b;
};

/// Parallelogram-law test g(w1+w2) + g(w1-w2) = 2 g(w1) + 2 g(w2) over random
/// unnormalized pairs; exactly the membership test for homogeneous quadratic
/// dependence on the quantum chart. Deterministic for a fixed seed.
QuadraticityReport quadraticity_test(const std::function<double(const ComplexVector&)>& g,
                                     Eigen::Index quantum_dim, int samples, unsigned long seed,
                                     double tolerance = 1e-8);

}  // namespace hybridsim
