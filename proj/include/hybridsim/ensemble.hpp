#pragma once

#include "hybridsim/integrator.hpp"

#include <variant>
#include <vector>

namespace hybridsim {

/// Point mass on the classical sector.
struct DeltaClassicalDensity {
  RealVector q;
  RealVector p;
};

/// Gaussian on the classical sector, covariance over the stacked (q, p)
/// coordinates (2k x 2k, symmetric positive semidefinite).
struct GaussianClassicalDensity {
  RealVector mean_q;
  RealVector mean_p;
  RealMatrix covariance;
};

struct QuantumMixtureComponent {
  double weight = 1.0;
  QuantumState omega;
};

/// Initial hybrid density: classical factor times a finite quantum mixture.
/// A single unit-weight component is a pure quantum state.
struct HybridDensitySpec {
  std::variant<DeltaClassicalDensity, GaussianClassicalDensity> classical;
  std::vector<QuantumMixtureComponent> quantum;

  /// Throws on asymmetric or indefinite covariance, weights not summing to 1,
  /// negative weights, or unnormalized components.
  void validate() const;
};

/// n i.i.d. draws; deterministic for a fixed seed.
std::vector<HybridState> sample(const HybridDensitySpec& density, int n, unsigned long seed);

/// Liouville evolution by characteristics: each sample follows the Hamiltonian
/// flow independently. Trajectories are computed concurrently (bounded by
/// max_threads; 0 means hardware concurrency) and returned in sample order.
std::vector<TrajectoryRecord> evolve_ensemble(const HybridHamiltonianSpec& spec,
                                              const std::vector<HybridState>& samples,
                                              const IntegratorConfig& config,
                                              int max_threads = 0);

struct EnsembleResult {
  std::vector<double> times;
  /// means[j][r], stderrs[j][r]: observable j at record r.
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> stderrs;
  int sample_count = 0;
  /// Set when sample_count == 1; the standard error is then reported as 0.
  bool degenerate_samples = false;
};

/// Per-time sample mean and standard error of each observable across
/// trajectories. Requires aligned time grids.
EnsembleResult estimate_observable(const std::vector<TrajectoryRecord>& trajectories,
                                   const std::vector<HybridObservable>& observables);
EnsembleResult estimate_observable(const std::vector<TrajectoryRecord>& trajectories,
                                   const HybridObservable& observable);

}  // namespace hybridsim
