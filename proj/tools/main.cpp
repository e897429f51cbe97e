#include "hybridsim/config.hpp"
#include "hybridsim/fullspace.hpp"
#include "hybridsim/reference_model.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

namespace {

using namespace hybridsim;

/// Unspecified failure (unwritable output, failed verification checks).
class CommandError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

/// Write through a temp file and rename so failed runs leave nothing behind.
void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CommandError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw CommandError("failed while writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw CommandError("cannot move output into place at " + path);
  }
}

int env_threads() {
  const char* raw = std::getenv("HYBRIDSIM_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  char* end = nullptr;
  const long parsed = std::strtol(raw, &end, 10);
  if (end == raw || *end != '\0' || parsed < 0) {
    std::cerr << "warning: ignoring malformed HYBRIDSIM_THREADS=" << raw << "\n";
    return 0;
  }
  return static_cast<int>(parsed);
}

void warn_on_renormalization(const RunConfig& config) {
  if (config.initial_norm_deviation > 1e-6) {
    std::cerr << "warning: initial quantum state renormalized, |norm - 1| = "
              << fmt(config.initial_norm_deviation) << "\n";
  }
}

std::string trajectory_csv(const TrajectoryRecord& record, const RunConfig& config) {
  const Eigen::Index k = config.model.classical_dof();
  const Eigen::Index d = config.model.quantum_dim();
  std::ostringstream out;
  out << "t";
  for (Eigen::Index i = 0; i < k; ++i) out << ",q" << i;
  for (Eigen::Index i = 0; i < k; ++i) out << ",p" << i;
  for (Eigen::Index i = 0; i < d; ++i) out << ",re_omega" << i;
  for (Eigen::Index i = 0; i < d; ++i) out << ",im_omega" << i;
  out << ",H,norm";
  for (const auto& name : config.observable_names) out << "," << name;
  out << "\n";
  for (std::size_t r = 0; r < record.times.size(); ++r) {
    const HybridState& state = record.states[r];
    out << fmt(record.times[r]);
    for (Eigen::Index i = 0; i < k; ++i) out << "," << fmt(state.classical.q[i]);
    for (Eigen::Index i = 0; i < k; ++i) out << "," << fmt(state.classical.p[i]);
    for (Eigen::Index i = 0; i < d; ++i) {
      out << "," << fmt(state.omega.amplitudes()[i].real());
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      out << "," << fmt(state.omega.amplitudes()[i].imag());
    }
    out << "," << fmt(record.energies[r]) << "," << fmt(record.norms[r]);
    for (std::size_t j = 0; j < record.observable_values.size(); ++j) {
      out << "," << fmt(record.observable_values[j][r]);
    }
    out << "\n";
  }
  return out.str();
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& out_override) {
  const RunConfig config = load_run_config(config_path);
  warn_on_renormalization(config);
  const TrajectoryRecord record = integrate(config.model, config.initial, config.integrator,
                                            config.observables, config.step_options);
  write_atomic(out_override.value_or(config.output_path), trajectory_csv(record, config));
  return 0;
}

struct SamplePoint {
  double q;
  double p;
  QuantumState omega;
};

std::vector<SamplePoint> verification_points(const RunConfig& config, int count,
                                             unsigned long seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&rng]() { return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0; };
  const Eigen::Index d = config.model.quantum_dim();
  const double q0 = config.initial.classical.q[0];
  const double p0 = config.initial.classical.p[0];
  std::vector<SamplePoint> points;
  points.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    ComplexVector w(d);
    for (Eigen::Index i = 0; i < d; ++i) w[i] = Complex(uniform(), uniform());
    points.push_back(SamplePoint{q0 + uniform(), p0 + uniform(),
                                 QuantumState::normalized(w / w.norm())});
  }
  return points;
}

int cmd_verify(const std::string& config_path, int levels, bool flip_first_coupling) {
  const RunConfig config = load_run_config(config_path);
  warn_on_renormalization(config);
  const auto& params = config.model.classical().params;
  if (params.hbar <= 0.0) {
    std::cerr << "verifier requires hbar > 0\n";
    return 2;
  }

  // Optionally corrupt one layer: the composite realization gets a flipped
  // first coupling while the reduced model keeps the original. The energy
  // cross-check below is exactly the test that must catch this.
  HybridHamiltonianSpec composite_spec = config.model;
  if (flip_first_coupling) {
    if (composite_spec.couplings().empty()) {
      throw ConfigValidationError("model has no coupling to corrupt");
    }
    std::vector<CouplingTerm> couplings = composite_spec.couplings();
    couplings[0].op = couplings[0].op.scaled(-1.0);
    composite_spec = HybridHamiltonianSpec(composite_spec.h0(), std::move(couplings),
                                           composite_spec.classical());
  }

  const FockTruncation truncation(levels);
  const HermitianOperator h_full = build_composite_hamiltonian(composite_spec, truncation);
  const Eigen::Index d = config.model.quantum_dim();
  const ComplexMatrix qmat = position_matrix(levels, params);
  const ComplexMatrix pmat = momentum_matrix(levels, params);

  const auto points = verification_points(config, 20, 9001);

  bool all_pass = true;
  auto report = [&all_pass](const std::string& label, bool pass, double residual) {
    std::cout << (pass ? "PASS" : "FAIL") << "  " << label
              << "  (max residual = " << fmt(residual) << ")\n";
    all_pass = all_pass && pass;
  };

  double energy_residual = 0.0;
  double operator_residual = 0.0;
  double commutator_q = 0.0;
  double commutator_p = 0.0;
  for (const auto& point : points) {
    const CompositeState psi =
        compose_constrained_state(point.q, point.p, point.omega, params, truncation);
    const double full = expectation(h_full, ComplexVector(psi.amplitudes));
    const double reduced = hamiltonian_value(
        config.model, RealVector::Constant(1, point.q), RealVector::Constant(1, point.p),
        point.omega.amplitudes(), true);
    energy_residual = std::max(energy_residual, std::abs(full - reduced));

    const ComplexMatrix partial =
        partial_coherent_expectation(h_full.matrix(), point.q, point.p, params, d);
    const double scalar = h_osc(point.q, point.p, config.model.classical().V, params, true);
    const ComplexMatrix reduced_op =
        effective_quantum_hamiltonian(config.model,
                                      RealVector::Constant(1, point.q)).matrix();
    operator_residual = std::max(
        operator_residual,
        (partial - scalar * ComplexMatrix::Identity(d, d) - reduced_op).cwiseAbs().maxCoeff());

    const HermitianOperator h_alpha =
        build_h_alpha(h_full, point.q, point.p, params, d);
    commutator_q =
        std::max(commutator_q, commutator_vanishing_check(qmat, h_alpha.matrix(), psi));
    commutator_p =
        std::max(commutator_p, commutator_vanishing_check(pmat, h_alpha.matrix(), psi));
  }
  report("energy cross-check (full vs reduced)", energy_residual <= 1e-7, energy_residual);
  report("effective operator cross-check", operator_residual <= 1e-7, operator_residual);
  report("position commutator vanishing", commutator_q <= 1e-7, commutator_q);
  report("momentum commutator vanishing", commutator_p <= 1e-7, commutator_p);

  // Short reduced trajectory, each recorded point lifted back to the
  // composite space; the minimal-dispersion excess must stay at zero.
  IntegratorConfig short_run = config.integrator;
  short_run.t_final = 2.0;
  short_run.dt = std::min(config.integrator.dt, 1e-2);
  short_run.output_stride = std::max(1, static_cast<int>(std::llround(0.1 / short_run.dt)));
  const TrajectoryRecord record =
      integrate(config.model, config.initial, short_run, {}, config.step_options);
  double excess_max = 0.0;
  for (const auto& state : record.states) {
    const CompositeState lifted = compose_constrained_state(
        state.classical.q[0], state.classical.p[0], state.omega, params, truncation);
    excess_max = std::max(excess_max, std::abs(fluctuation_functional(lifted, params)));
  }
  report("fluctuation excess along trajectory", excess_max <= 1e-8, excess_max);

  return all_pass ? 0 : 6;
}

int cmd_bracket_demo(unsigned long seed) {
  const HybridHamiltonianSpec model = two_qubit_oscillator();
  const double hbar = model.hbar();
  const HermitianOperator sz1 = pauli(PauliAxis::Z, 1, 2);
  const HybridObservable f1 =
      HybridObservable::weighted_expectation(PhaseSpacePolynomial::coordinate_q(1, 0), sz1);
  const HybridObservable f2 =
      HybridObservable::weighted_expectation(PhaseSpacePolynomial::coordinate_p(1, 0), sz1);
  const StateFunction forward = bracket_analytic(f1, f2, hbar);
  const StateFunction backward = bracket_analytic(f2, f1, hbar);

  std::cout << "f1 = q <sz1>, f2 = p <sz1>\n";
  std::mt19937_64 rng(seed);
  auto uniform = [&rng]() { return 3.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.5; };
  RealVector q(1);
  RealVector p(1);
  ComplexVector w(4);
  for (int s = 0; s < 3; ++s) {
    q[0] = uniform();
    p[0] = uniform();
    for (Eigen::Index i = 0; i < 4; ++i) w[i] = Complex(uniform(), uniform());
    w /= w.norm();
    const double value = forward(q, p, w);
    std::cout << "state " << s + 1 << ": q = " << fmt(q[0]) << ", p = " << fmt(p[0])
              << ", {f1, f2} = " << fmt(value) << ", {f2, f1} = " << fmt(backward(q, p, w))
              << "\n";
  }

  const auto bracket_of_state = [&forward, &q, &p](const ComplexVector& omega) {
    return forward(q, p, omega);
  };
  const QuadraticityReport verdict = quadraticity_test(bracket_of_state, 4, 64, seed + 1);
  std::cout << "{f1, f2} quadratic in the quantum amplitudes: "
            << (verdict.quadratic ? "yes" : "no") << "\n";
  if (!verdict.quadratic) {
    std::cout << "parallelogram violation = " << fmt(verdict.max_violation)
              << " at witness pair\n";
    for (const auto* witness : {&verdict.witness_a, &verdict.witness_b}) {
      std::cout << "  [";
      for (Eigen::Index i = 0; i < witness->size(); ++i) {
        if (i > 0) std::cout << ", ";
        std::cout << fmt((*witness)[i].real()) << (((*witness)[i].imag() < 0) ? " - " : " + ")
                  << fmt(std::abs((*witness)[i].imag())) << "i";
      }
      std::cout << "]\n";
    }
  }

  // Control pair: the purely classical bracket {q, p} = 1. On normalized
  // states the constant is <omega|I|omega>, whose amplitude extension is a
  // quadratic form, and the test confirms that reading.
  const HybridObservable cq =
      HybridObservable::classical_only(PhaseSpacePolynomial::coordinate_q(1, 0));
  const HybridObservable cp =
      HybridObservable::classical_only(PhaseSpacePolynomial::coordinate_p(1, 0));
  const StateFunction control = bracket_analytic(cq, cp, hbar);
  const HermitianOperator identity = HermitianOperator::identity(4);
  const QuadraticityReport control_verdict = quadraticity_test(
      [&identity](const ComplexVector& omega) { return expectation(identity, omega); }, 4, 64,
      seed + 2);
  std::cout << "control {q, p} = " << fmt(control(q, p, w))
            << " (constant); as <omega|I|omega> it is "
            << (control_verdict.quadratic ? "quadratic" : "not quadratic") << "\n";

  return verdict.quadratic ? 6 : 0;
}

std::string ensemble_csv(const EnsembleResult& result,
                         const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "t";
  for (const auto& name : names) out << ",mean_" << name << ",stderr_" << name;
  out << "\n";
  for (std::size_t r = 0; r < result.times.size(); ++r) {
    out << fmt(result.times[r]);
    for (std::size_t j = 0; j < result.means.size(); ++j) {
      out << "," << fmt(result.means[j][r]) << "," << fmt(result.stderrs[j][r]);
    }
    out << "\n";
  }
  return out.str();
}

int cmd_ensemble(const std::string& config_path, const std::string& density_path, int n,
                 unsigned long seed, const std::optional<std::string>& out_override) {
  const RunConfig config = load_run_config(config_path);
  warn_on_renormalization(config);

  HybridDensitySpec density;
  try {
    density = load_density(density_path);
    if (density.quantum.front().omega.dim() != config.model.quantum_dim()) {
      throw ConfigValidationError("density does not match the model's quantum dimension");
    }
    const auto* delta = std::get_if<DeltaClassicalDensity>(&density.classical);
    const Eigen::Index density_dof =
        delta ? delta->q.size()
              : std::get<GaussianClassicalDensity>(density.classical).mean_q.size();
    if (density_dof != config.model.classical_dof()) {
      throw ConfigValidationError("density does not match the classical DOF count");
    }
  } catch (const std::exception& e) {
    std::cerr << "invalid density: " << e.what() << "\n";
    return 5;
  }

  std::vector<std::string> names = config.observable_names;
  std::vector<HybridObservable> observables = config.observables;
  if (observables.empty()) {
    const int k = config.model.classical_dof();
    for (int i = 0; i < k; ++i) {
      names.push_back("q" + std::to_string(i));
      observables.push_back(
          HybridObservable::classical_only(PhaseSpacePolynomial::coordinate_q(k, i)));
      names.push_back("p" + std::to_string(i));
      observables.push_back(
          HybridObservable::classical_only(PhaseSpacePolynomial::coordinate_p(k, i)));
    }
  }

  const auto samples = sample(density, n, seed);
  const auto trajectories =
      evolve_ensemble(config.model, samples, config.integrator, env_threads());
  const EnsembleResult result = estimate_observable(trajectories, observables);
  if (result.degenerate_samples) {
    std::cerr << "warning: single sample, standard errors are not meaningful\n";
  }
  write_atomic(out_override.value_or("ensemble.csv"), ensemble_csv(result, names));
  return 0;
}

template <typename F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const ConfigParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigValidationError& e) {
    std::cerr << "invalid model: " << e.what() << "\n";
    return 2;
  } catch (const TruncationError& e) {
    std::cerr << "truncation inadequate: " << e.what()
              << "; retry with --levels " << e.suggested_levels() << "\n";
    return 4;
  } catch (const CommandError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 6;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid model: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid quantum-classical trajectory and verification tool"};
  app.require_subcommand(1);

  std::string config_path;
  std::string density_path;
  std::optional<std::string> out_path;
  int levels = 64;
  bool flip_coupling = false;
  int n_samples = 1;
  unsigned long seed = 42;

  auto* run = app.add_subcommand("run", "integrate one trajectory and write a CSV");
  run->add_option("config", config_path, "model configuration file")->required();
  run->add_option("--out", out_path, "output path (overrides the config)");

  auto* verify = app.add_subcommand(
      "verify", "cross-check the reduced dynamics against the composite realization");
  verify->add_option("config", config_path, "model configuration file")->required();
  verify->add_option("--levels", levels, "kept oscillator levels")
      ->check(CLI::Range(2, 1 << 16));
  verify->add_flag("--debug-flip-coupling", flip_coupling)->group("");

  auto* demo = app.add_subcommand(
      "bracket-demo", "show that the bracket leaves the expectation function class");
  demo->add_option("--seed", seed, "sample state seed");

  auto* ensemble = app.add_subcommand("ensemble", "evolve a sampled density and write moments");
  ensemble->add_option("config", config_path, "model configuration file")->required();
  ensemble->add_option("density", density_path, "initial density file")->required();
  ensemble->add_option("--n", n_samples, "sample count")->required()->check(CLI::Range(1, 1 << 24));
  ensemble->add_option("--seed", seed, "sampling seed");
  ensemble->add_option("--out", out_path, "output path (default ensemble.csv)");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    return guarded([&] { return cmd_run(config_path, out_path); });
  }
  if (verify->parsed()) {
    return guarded([&] { return cmd_verify(config_path, levels, flip_coupling); });
  }
  if (demo->parsed()) {
    return guarded([&] { return cmd_bracket_demo(seed); });
  }
  return guarded([&] { return cmd_ensemble(config_path, density_path, n_samples, seed, out_path); });
}
