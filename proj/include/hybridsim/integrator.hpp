#pragma once

#include "hybridsim/bracket.hpp"
#include "hybridsim/model.hpp"

#include <vector>

namespace hybridsim {

enum class Method { Strang, Rk4 };

struct IntegratorConfig {
  Method method = Method::Strang;
  double dt = 1e-3;
  double t_final = 0.0;
  int output_stride = 1;

  /// Throws unless dt > 0, t_final >= 0, stride >= 1, and dt <= t_final when
  /// t_final > 0.
  void validate() const;
};

/// Diagnostic knobs for the steppers. Gauge phase and renormalization are both
/// off by default; renormalization applies to the Rk4 stepper only.
struct StepOptions {
  bool include_gauge_phase = false;
  bool renormalize = false;
};

/// One Strang step: half kick, half drift, exact quantum rotation at the
/// midpoint q, half drift, half kick. The quantum sub-step is unitary, so the
/// state norm is preserved to roundoff.
HybridState step_strang(const HybridHamiltonianSpec& spec, const HybridState& state, double dt,
                        const StepOptions& options = {});

/// Classical fourth-order Runge-Kutta on the real chart (q, p, x, y).
HybridState step_rk4(const HybridHamiltonianSpec& spec, const HybridState& state, double dt,
                     const StepOptions& options = {});

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<HybridState> states;
  std::vector<double> energies;
  std::vector<double> norms;
  /// observable_values[j][r] is observable j at record r.
  std::vector<std::vector<double>> observable_values;
};

/// Fixed-step integration from t = 0 to t_final, recording every
/// output_stride steps (and always the initial and final states).
/// Throws std::runtime_error naming the step index if the state leaves the
/// finite range.
TrajectoryRecord integrate(const HybridHamiltonianSpec& spec, const HybridState& initial,
                           const IntegratorConfig& config,
                           const std::vector<HybridObservable>& observables = {},
                           const StepOptions& options = {});

struct ConservationReport {
  double max_energy_drift = 0.0;  // relative to the initial energy
  double max_norm_drift = 0.0;    // absolute deviation of ||omega|| from 1
};

ConservationReport conservation_report(const TrajectoryRecord& trajectory);

}  // namespace hybridsim
