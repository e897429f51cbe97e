#include "hybridsim/reference_model.hpp"

namespace hybridsim {

HybridHamiltonianSpec two_qubit_oscillator(const TwoQubitOscillatorParams& params) {
  const HermitianOperator sz1 = pauli(PauliAxis::Z, 1, 2);
  const HermitianOperator sz2 = pauli(PauliAxis::Z, 2, 2);
  const HermitianOperator sx1 = pauli(PauliAxis::X, 1, 2);
  const HermitianOperator sx2 = pauli(PauliAxis::X, 2, 2);

  HermitianOperator h0 = sz1.scaled(params.epsilon) + sz2.scaled(params.epsilon) +
                         HermitianOperator(sx1.matrix() * sx2.matrix()).scaled(params.mu);

  const PolynomialPotential linear_q({0.0, 1.0});
  std::vector<CouplingTerm> couplings;
  couplings.push_back(CouplingTerm{{linear_q}, sz1.scaled(params.lambda1)});
  couplings.push_back(CouplingTerm{
      {linear_q},
      (params.second_coupling_on_qubit1 ? sz1 : sz2).scaled(params.lambda2)});

  return HybridHamiltonianSpec(std::move(h0), std::move(couplings),
                               ClassicalSector{params.V, params.osc, 1});
}

}  // namespace hybridsim
