#include "hybridsim/bracket.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace hybridsim {

namespace {

double int_pow(double base, int exponent) {
  double value = 1.0;
  for (int i = 0; i < exponent; ++i) value *= base;
  return value;
}

}  // namespace

PhaseSpacePolynomial::PhaseSpacePolynomial(int dof, std::vector<Monomial> monomials)
    : dof_(dof), monomials_(std::move(monomials)) {
  if (dof_ < 0) throw std::invalid_argument("PhaseSpacePolynomial: dof must be >= 0");
  for (auto& m : monomials_) {
    if (m.q_powers.size() != static_cast<std::size_t>(dof_) ||
        m.p_powers.size() != static_cast<std::size_t>(dof_)) {
      throw std::invalid_argument("PhaseSpacePolynomial: power lists must have length dof");
    }
  }
  std::erase_if(monomials_, [](const Monomial& m) { return m.coeff == 0.0; });
}

PhaseSpacePolynomial PhaseSpacePolynomial::zero(int dof) {
  return PhaseSpacePolynomial(dof, {});
}

PhaseSpacePolynomial PhaseSpacePolynomial::constant(int dof, double value) {
  Monomial m{value, std::vector<int>(dof, 0), std::vector<int>(dof, 0)};
  return PhaseSpacePolynomial(dof, {m});
}

PhaseSpacePolynomial PhaseSpacePolynomial::coordinate_q(int dof, int index) {
  Monomial m{1.0, std::vector<int>(dof, 0), std::vector<int>(dof, 0)};
  m.q_powers.at(index) = 1;
  return PhaseSpacePolynomial(dof, {m});
}

PhaseSpacePolynomial PhaseSpacePolynomial::coordinate_p(int dof, int index) {
  Monomial m{1.0, std::vector<int>(dof, 0), std::vector<int>(dof, 0)};
  m.p_powers.at(index) = 1;
  return PhaseSpacePolynomial(dof, {m});
}

double PhaseSpacePolynomial::operator()(const RealVector& q, const RealVector& p) const {
  if (q.size() != dof_ || p.size() != dof_) {
    throw std::invalid_argument("PhaseSpacePolynomial: argument dimension mismatch");
  }
  double value = 0.0;
  for (const auto& m : monomials_) {
    double term = m.coeff;
    for (int i = 0; i < dof_; ++i) {
      term *= int_pow(q(i), m.q_powers[static_cast<std::size_t>(i)]);
      term *= int_pow(p(i), m.p_powers[static_cast<std::size_t>(i)]);
    }
    value += term;
  }
  return value;
}

PhaseSpacePolynomial PhaseSpacePolynomial::derivative_q(int index) const {
  std::vector<Monomial> out;
  for (const auto& m : monomials_) {
    const int power = m.q_powers[static_cast<std::size_t>(index)];
    if (power == 0) continue;
    Monomial d = m;
    d.coeff *= static_cast<double>(power);
    d.q_powers[static_cast<std::size_t>(index)] = power - 1;
    out.push_back(std::move(d));
  }
  return PhaseSpacePolynomial(dof_, std::move(out));
}

PhaseSpacePolynomial PhaseSpacePolynomial::derivative_p(int index) const {
  std::vector<Monomial> out;
  for (const auto& m : monomials_) {
    const int power = m.p_powers[static_cast<std::size_t>(index)];
    if (power == 0) continue;
    Monomial d = m;
    d.coeff *= static_cast<double>(power);
    d.p_powers[static_cast<std::size_t>(index)] = power - 1;
    out.push_back(std::move(d));
  }
  return PhaseSpacePolynomial(dof_, std::move(out));
}

HybridObservable::HybridObservable(std::vector<Term> terms, PhaseSpacePolynomial classical_part)
    : terms_(std::move(terms)), classical_part_(std::move(classical_part)) {
  for (const auto& term : terms_) {
    if (term.coefficient.dof() != classical_part_.dof()) {
      throw std::invalid_argument("HybridObservable: inconsistent classical DOF counts");
    }
    if (term.op.dim() != terms_.front().op.dim()) {
      throw std::invalid_argument("HybridObservable: operator dimensions must agree");
    }
  }
}

HybridObservable HybridObservable::classical_only(PhaseSpacePolynomial polynomial) {
  return HybridObservable({}, std::move(polynomial));
}

HybridObservable HybridObservable::weighted_expectation(PhaseSpacePolynomial coefficient,
                                                        HermitianOperator op) {
  const int dof = coefficient.dof();
  std::vector<Term> terms;
  terms.push_back(Term{std::move(coefficient), std::move(op)});
  return HybridObservable(std::move(terms), PhaseSpacePolynomial::zero(dof));
}

Eigen::Index HybridObservable::quantum_dim() const {
  return terms_.empty() ? 0 : terms_.front().op.dim();
}

double HybridObservable::evaluate(const HybridState& state) const {
  return evaluate(state.classical.q, state.classical.p, state.omega.amplitudes());
}

double HybridObservable::evaluate(const RealVector& q, const RealVector& p,
                                  const ComplexVector& omega) const {
  double value = classical_part_(q, p);
  for (const auto& term : terms_) {
    value += term.coefficient(q, p) * expectation(term.op, omega);
  }
  return value;
}

StateFunction as_state_function(const HybridObservable& f) {
  return [f](const RealVector& q, const RealVector& p, const ComplexVector& omega) {
    return f.evaluate(q, p, omega);
  };
}

StateFunction bracket_analytic(const HybridObservable& f1, const HybridObservable& f2,
                               double hbar) {
  if (!(hbar > 0.0)) throw std::invalid_argument("bracket_analytic: hbar must be > 0");
  if (f1.quantum_dim() != 0 && f2.quantum_dim() != 0 && f1.quantum_dim() != f2.quantum_dim()) {
    throw std::invalid_argument("bracket_analytic: quantum dimensions must agree");
  }
  const int dof = f1.dof();
  if (dof != f2.dof()) {
    throw std::invalid_argument("bracket_analytic: classical DOF counts must agree");
  }

  // Partial derivatives of each observable with respect to q_i and p_i stay in
  // the observable class; precompute them term by term.
  struct Parts {
    std::vector<HybridObservable> dq;
    std::vector<HybridObservable> dp;
  };
  auto differentiate = [dof](const HybridObservable& f) {
    Parts parts;
    for (int i = 0; i < dof; ++i) {
      std::vector<HybridObservable::Term> dq_terms;
      std::vector<HybridObservable::Term> dp_terms;
      for (const auto& term : f.terms()) {
        if (auto d = term.coefficient.derivative_q(i); !d.is_zero()) {
          dq_terms.push_back({std::move(d), term.op});
        }
        if (auto d = term.coefficient.derivative_p(i); !d.is_zero()) {
          dp_terms.push_back({std::move(d), term.op});
        }
      }
      parts.dq.emplace_back(std::move(dq_terms), f.classical_part().derivative_q(i));
      parts.dp.emplace_back(std::move(dp_terms), f.classical_part().derivative_p(i));
    }
    return parts;
  };
  const Parts parts1 = differentiate(f1);
  const Parts parts2 = differentiate(f2);

  return [f1, f2, parts1, parts2, hbar, dof](const RealVector& q, const RealVector& p,
                                             const ComplexVector& omega) {
    double value = 0.0;
    for (int i = 0; i < dof; ++i) {
      value += parts1.dq[static_cast<std::size_t>(i)].evaluate(q, p, omega) *
                   parts2.dp[static_cast<std::size_t>(i)].evaluate(q, p, omega) -
               parts2.dq[static_cast<std::size_t>(i)].evaluate(q, p, omega) *
                   parts1.dp[static_cast<std::size_t>(i)].evaluate(q, p, omega);
    }
    // (1/i hbar) <[A_a, B_b]> = (2/hbar) Im <omega|A_a B_b|omega>
    for (const auto& ta : f1.terms()) {
      for (const auto& tb : f2.terms()) {
        const Complex cross = omega.dot(ta.op.matrix() * (tb.op.matrix() * omega));
        value += ta.coefficient(q, p) * tb.coefficient(q, p) * 2.0 * cross.imag() / hbar;
      }
    }
    return value;
  };
}

double bracket_numeric(const StateFunction& f1, const StateFunction& f2, const RealVector& q,
                       const RealVector& p, const ComplexVector& omega, double hbar, double h) {
  if (!(h > 0.0 && h <= 1e-3)) {
    throw std::invalid_argument("bracket_numeric: step must satisfy 0 < h <= 1e-3");
  }
  if (!(hbar > 0.0)) throw std::invalid_argument("bracket_numeric: hbar must be > 0");

  const Eigen::Index k = q.size();
  const Eigen::Index d = omega.size();
  const double inv_2h = 1.0 / (2.0 * h);

  auto d_classical = [&](const StateFunction& f, Eigen::Index i, bool momentum) {
    RealVector qp = q;
    RealVector pp = p;
    RealVector qm = q;
    RealVector pm = p;
    (momentum ? pp(i) : qp(i)) += h;
    (momentum ? pm(i) : qm(i)) -= h;
    return (f(qp, pp, omega) - f(qm, pm, omega)) * inv_2h;
  };
  // Chart perturbation: x_j -> x_j + h shifts amplitude c_j by h/sqrt(2),
  // y_j -> y_j + h shifts it by i h/sqrt(2).
  auto d_quantum = [&](const StateFunction& f, Eigen::Index j, bool imaginary_part) {
    const Complex delta = imaginary_part ? Complex(0.0, h / std::sqrt(2.0))
                                         : Complex(h / std::sqrt(2.0), 0.0);
    ComplexVector wp = omega;
    ComplexVector wm = omega;
    wp(j) += delta;
    wm(j) -= delta;
    return (f(q, p, wp) - f(q, p, wm)) * inv_2h;
  };

  double value = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    value += d_classical(f1, i, false) * d_classical(f2, i, true) -
             d_classical(f2, i, false) * d_classical(f1, i, true);
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    value += (d_quantum(f1, j, false) * d_quantum(f2, j, true) -
              d_quantum(f2, j, false) * d_quantum(f1, j, true)) /
             hbar;
  }
  return value;
}

double bracket_numeric(const HybridObservable& f1, const HybridObservable& f2,
                       const HybridState& state, double hbar, double h) {
  return bracket_numeric(as_state_function(f1), as_state_function(f2), state.classical.q,
                         state.classical.p, state.omega.amplitudes(), hbar, h);
}

QuadraticityReport quadraticity_test(const std::function<double(const ComplexVector&)>& g,
                                     Eigen::Index quantum_dim, int samples, unsigned long seed,
                                     double tolerance) {
  if (samples < 1) throw std::invalid_argument("quadraticity_test: samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_vector = [&]() {
    ComplexVector v(quantum_dim);
    for (Eigen::Index i = 0; i < quantum_dim; ++i) v(i) = Complex(normal(rng), normal(rng));
    return v;
  };

  QuadraticityReport report;
  for (int s = 0; s < samples; ++s) {
    const ComplexVector a = random_vector();
    const ComplexVector b = random_vector();
    const double sum = g(a + b);
    const double diff = g(a - b);
    const double ga = g(a);
    const double gb = g(b);
    const double violation = std::abs(sum + diff - 2.0 * ga - 2.0 * gb);
    const double scale =
        std::max(1.0, std::abs(sum) + std::abs(diff) + 2.0 * std::abs(ga) + 2.0 * std::abs(gb));
    if (violation > report.max_violation) report.max_violation = violation;
    if (violation > tolerance * scale) {
      report.quadratic = false;
      report.witness_a = a;
      report.witness_b = b;
      return report;
    }
  }
  return report;
}

}  // namespace hybridsim
