#pragma once

#include <vector>

namespace hybridsim {

/// Polynomial in a single position coordinate, coefficients[n] multiplying q^n.
/// Trailing zero coefficients are normalized away on construction.
class PolynomialPotential {
 public:
  PolynomialPotential() = default;  // identically zero
  explicit PolynomialPotential(std::vector<double> coefficients);

  /// (1/2) m Omega^2 q^2
  static PolynomialPotential harmonic(double mass, double omega);

  /// Degree of the polynomial; -1 for the zero polynomial.
  int degree() const { return static_cast<int>(coefficients_.size()) - 1; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  bool is_zero() const { return coefficients_.empty(); }

  double operator()(double q) const;

 private:
  std::vector<double> coefficients_;
};

PolynomialPotential operator+(const PolynomialPotential& a, const PolynomialPotential& b);
PolynomialPotential operator*(double factor, const PolynomialPotential& v);

/// n-th formal derivative.
PolynomialPotential derivative(const PolynomialPotential& v, int order = 1);

/// Oscillator sector parameters. hbar = 0 is the legal macro-limit.
struct OscillatorParams {
  double mass = 1.0;
  double Omega = 1.0;
  double hbar = 1.0;

  /// Throws std::invalid_argument unless mass > 0, Omega > 0, hbar >= 0.
  void validate() const;
};

/// Coherent-state expectation of V at displacement q:
///   V(q) + sum_k (1/(2^k k!)) hbar^k V^(2k)(q) / (2 m Omega)^k.
/// The series terminates at k = floor(deg/2). Degrees beyond 30 are rejected.
double coherent_expectation(const PolynomialPotential& v, double q, const OscillatorParams& params);

/// E[V(q + xi)] for zero-mean Gaussian xi with the given variance, via
/// closed-form even moments E[xi^(2n)] = (2n-1)!! variance^n. Independent
/// check of the series route above.
double gaussian_moment_oracle(const PolynomialPotential& v, double q, double variance);

/// p^2/2m + coherent_expectation(V, q). The kinetic fluctuation constant
/// hbar*Omega/4 from <p^2> over a coherent state is excluded by default and
/// added when include_kinetic_fluctuation is set; it is state-independent and
/// never affects the dynamics.
double h_osc(double q, double p, const PolynomialPotential& v, const OscillatorParams& params,
             bool include_kinetic_fluctuation = false);

}  // namespace hybridsim
