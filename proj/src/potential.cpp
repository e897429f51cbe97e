#include "hybridsim/potential.hpp"

#include <cmath>
#include <stdexcept>

namespace hybridsim {

namespace {
constexpr int kMaxSeriesDegree = 30;
}

PolynomialPotential::PolynomialPotential(std::vector<double> coefficients)
    : coefficients_(std::move(coefficients)) {
  while (!coefficients_.empty() && coefficients_.back() == 0.0) {
    coefficients_.pop_back();
  }
}

PolynomialPotential PolynomialPotential::harmonic(double mass, double omega) {
  return PolynomialPotential({0.0, 0.0, 0.5 * mass * omega * omega});
}

double PolynomialPotential::operator()(double q) const {
  double value = 0.0;
  for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) {
    value = value * q + *it;
  }
  return value;
}

PolynomialPotential operator+(const PolynomialPotential& a, const PolynomialPotential& b) {
  std::vector<double> coeffs(std::max(a.coefficients().size(), b.coefficients().size()), 0.0);
  for (std::size_t n = 0; n < a.coefficients().size(); ++n) coeffs[n] += a.coefficients()[n];
  for (std::size_t n = 0; n < b.coefficients().size(); ++n) coeffs[n] += b.coefficients()[n];
  return PolynomialPotential(std::move(coeffs));
}

PolynomialPotential operator*(double factor, const PolynomialPotential& v) {
  std::vector<double> coeffs = v.coefficients();
  for (double& c : coeffs) c *= factor;
  return PolynomialPotential(std::move(coeffs));
}

PolynomialPotential derivative(const PolynomialPotential& v, int order) {
  if (order < 0) throw std::invalid_argument("derivative: order must be >= 0");
  std::vector<double> coeffs = v.coefficients();
  for (int pass = 0; pass < order; ++pass) {
    if (coeffs.empty()) break;
    for (std::size_t n = 1; n < coeffs.size(); ++n) {
      coeffs[n - 1] = static_cast<double>(n) * coeffs[n];
    }
    coeffs.pop_back();
  }
  return PolynomialPotential(std::move(coeffs));
}

void OscillatorParams::validate() const {
  if (!(mass > 0.0)) throw std::invalid_argument("OscillatorParams: mass must be > 0");
  if (!(Omega > 0.0)) throw std::invalid_argument("OscillatorParams: Omega must be > 0");
  if (!(hbar >= 0.0)) throw std::invalid_argument("OscillatorParams: hbar must be >= 0");
}

double coherent_expectation(const PolynomialPotential& v, double q, const OscillatorParams& params) {
  params.validate();
  if (v.degree() > kMaxSeriesDegree) {
    throw std::invalid_argument("coherent_expectation: polynomial degree beyond 30 unsupported");
  }
  double value = v(q);
  if (params.hbar == 0.0) return value;  // macro-limit: bare V(q)

  const double width = params.hbar / (2.0 * params.mass * params.Omega);
  double factor = 1.0;  // accumulates width^k / (2^k k!)
  PolynomialPotential deriv = v;
  const int terms = v.degree() / 2;
  for (int k = 1; k <= terms; ++k) {
    factor *= width / (2.0 * static_cast<double>(k));
    deriv = derivative(deriv, 2);
    value += factor * deriv(q);
  }
  return value;
}

double gaussian_moment_oracle(const PolynomialPotential& v, double q, double variance) {
  if (!(variance >= 0.0)) throw std::invalid_argument("gaussian_moment_oracle: variance must be >= 0");
  // E[(q + xi)^n] = sum_{j even} C(n, j) q^(n-j) (j-1)!! variance^(j/2)
  double value = 0.0;
  const auto& coeffs = v.coefficients();
  for (std::size_t n = 0; n < coeffs.size(); ++n) {
    if (coeffs[n] == 0.0) continue;
    double moment = 0.0;
    double binom = 1.0;  // C(n, j), updated incrementally over j
    for (std::size_t j = 0; j <= n; ++j) {
      if (j % 2 == 0) {
        double double_factorial = 1.0;
        for (std::size_t m = 3; m <= j; m += 2) double_factorial *= static_cast<double>(m);
        moment += binom * std::pow(q, static_cast<double>(n - j)) * double_factorial *
                  std::pow(variance, static_cast<double>(j) / 2.0);
      }
      binom *= static_cast<double>(n - j) / static_cast<double>(j + 1);
    }
    value += coeffs[n] * moment;
  }
  return value;
}

double h_osc(double q, double p, const PolynomialPotential& v, const OscillatorParams& params,
             bool include_kinetic_fluctuation) {
  params.validate();
  double value = p * p / (2.0 * params.mass) + coherent_expectation(v, q, params);
  if (include_kinetic_fluctuation) {
    value += params.hbar * params.Omega / 4.0;
  }
  return value;
}

}  // namespace hybridsim
