#pragma once

#include "hybridsim/bracket.hpp"
#include "hybridsim/ensemble.hpp"
#include "hybridsim/integrator.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace hybridsim {

/// Structural problem with a config document: unreadable file, bad JSON,
/// missing or mistyped fields.
class ConfigParseError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Well-formed document whose values do not make a valid model.
class ConfigValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  HybridHamiltonianSpec model;
  HybridState initial;
  IntegratorConfig integrator;
  StepOptions step_options;
  std::vector<std::string> observable_names;
  std::vector<HybridObservable> observables;
  std::string output_path = "trajectory.csv";
  /// |norm - 1| of the stored initial amplitudes before the load-time
  /// renormalization; callers warn above 1e-6.
  double initial_norm_deviation = 0.0;
};

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);
nlohmann::json serialize(const RunConfig& config);

HybridDensitySpec parse_density(const nlohmann::json& doc);
HybridDensitySpec load_density(const std::string& path);
nlohmann::json serialize(const HybridDensitySpec& density);

/// Complex matrix as nested rows of [re, im] pairs.
nlohmann::json matrix_to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const nlohmann::json& j);

}  // namespace hybridsim
