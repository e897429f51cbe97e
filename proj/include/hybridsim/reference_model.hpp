#pragma once

#include "hybridsim/model.hpp"

namespace hybridsim {

/// Two equal qubits coupled through their z components to one nonlinear
/// oscillator. Default parameter values are demonstration choices.
struct TwoQubitOscillatorParams {
  double epsilon = 1.0;
  double mu = 0.5;
  double lambda1 = 0.3;
  double lambda2 = 0.2;
  PolynomialPotential V = PolynomialPotential({0.0, 0.0, 0.5, 0.0, 0.1});
  OscillatorParams osc{1.0, 1.0, 1.0};
  /// When set, the second coupling acts on qubit 1 instead of qubit 2
  /// (comparison variant; the default follows the interaction term).
  bool second_coupling_on_qubit1 = false;
};

HybridHamiltonianSpec two_qubit_oscillator(const TwoQubitOscillatorParams& params = {});

}  // namespace hybridsim
