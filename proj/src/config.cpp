#include "hybridsim/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace hybridsim {

namespace {

using nlohmann::json;

const json& require(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw ConfigParseError(std::string("missing field \"") + key + "\"");
  }
  return *it;
}

double as_number(const json& j, const char* what) {
  if (!j.is_number()) {
    throw ConfigParseError(std::string(what) + " must be a number");
  }
  return j.get<double>();
}

int as_int(const json& j, const char* what) {
  if (!j.is_number_integer()) {
    throw ConfigParseError(std::string(what) + " must be an integer");
  }
  return j.get<int>();
}

std::string as_string(const json& j, const char* what) {
  if (!j.is_string()) {
    throw ConfigParseError(std::string(what) + " must be a string");
  }
  return j.get<std::string>();
}

bool optional_bool(const json& j, const char* key, bool fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) {
    throw ConfigParseError(std::string("field \"") + key + "\" must be a boolean");
  }
  return it->get<bool>();
}

std::vector<double> number_array(const json& j, const char* what) {
  if (!j.is_array()) {
    throw ConfigParseError(std::string(what) + " must be an array of numbers");
  }
  std::vector<double> values;
  values.reserve(j.size());
  for (const auto& entry : j) values.push_back(as_number(entry, what));
  return values;
}

RealVector real_vector(const json& j, const char* what) {
  const auto values = number_array(j, what);
  return Eigen::Map<const RealVector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

RealMatrix real_matrix(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) {
    throw ConfigParseError(std::string(what) + " must be a nonempty array of rows");
  }
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  RealMatrix m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != cols) {
      throw ConfigParseError(std::string(what) + " rows must have equal length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          as_number(row[c], what);
    }
  }
  return m;
}

Complex complex_entry(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) {
    throw ConfigParseError(std::string(what) + " entries must be [re, im] pairs");
  }
  return {as_number(j[0], what), as_number(j[1], what)};
}

ComplexVector complex_vector(const json& j, const char* what) {
  if (!j.is_array()) {
    throw ConfigParseError(std::string(what) + " must be an array of [re, im] pairs");
  }
  ComplexVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = complex_entry(j[i], what);
  }
  return v;
}

json complex_vector_to_json(const ComplexVector& v) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    rows.push_back({v[i].real(), v[i].imag()});
  }
  return rows;
}

PolynomialPotential polynomial(const json& j, const char* what) {
  return PolynomialPotential(number_array(j, what));
}

json polynomial_to_json(const PolynomialPotential& p) {
  return json(p.coefficients());
}

PhaseSpacePolynomial phase_polynomial(const json& j, int dof, const char* what) {
  const json& monomials = require(j, "monomials");
  if (!monomials.is_array()) {
    throw ConfigParseError(std::string(what) + ".monomials must be an array");
  }
  std::vector<PhaseSpacePolynomial::Monomial> parsed;
  parsed.reserve(monomials.size());
  for (const auto& m : monomials) {
    PhaseSpacePolynomial::Monomial mono;
    mono.coeff = as_number(require(m, "coeff"), "monomial coeff");
    const json& qp = require(m, "q");
    const json& pp = require(m, "p");
    if (!qp.is_array() || !pp.is_array()) {
      throw ConfigParseError(std::string(what) + " monomial powers must be arrays");
    }
    for (const auto& v : qp) mono.q_powers.push_back(as_int(v, "monomial q power"));
    for (const auto& v : pp) mono.p_powers.push_back(as_int(v, "monomial p power"));
    parsed.push_back(std::move(mono));
  }
  return PhaseSpacePolynomial(dof, std::move(parsed));
}

json phase_polynomial_to_json(const PhaseSpacePolynomial& p) {
  json monomials = json::array();
  for (const auto& m : p.monomials()) {
    monomials.push_back({{"coeff", m.coeff}, {"q", m.q_powers}, {"p", m.p_powers}});
  }
  return json{{"monomials", std::move(monomials)}};
}

[[noreturn]] void rethrow_as_validation(const std::exception& e) {
  throw ConfigValidationError(e.what());
}

json read_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigParseError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigParseError(path + ": " + e.what());
  }
}

}  // namespace

json matrix_to_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back({m(r, c).real(), m(r, c).imag()});
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ComplexMatrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) {
    throw ConfigParseError("matrix must be a nonempty array of rows");
  }
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  ComplexMatrix m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != cols) {
      throw ConfigParseError("matrix rows must have equal length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          complex_entry(row[c], "matrix");
    }
  }
  return m;
}

RunConfig parse_run_config(const json& doc) {
  const json& model_doc = require(doc, "model");
  const json& classical_doc = require(model_doc, "classical");
  const json& couplings_doc = require(model_doc, "couplings");
  if (!couplings_doc.is_array()) throw ConfigParseError("model.couplings must be an array");

  ClassicalSector classical;
  classical.V = polynomial(require(classical_doc, "potential"), "classical.potential");
  classical.params.mass = as_number(require(classical_doc, "mass"), "classical.mass");
  classical.params.Omega = as_number(require(classical_doc, "Omega"), "classical.Omega");
  classical.params.hbar = as_number(require(classical_doc, "hbar"), "classical.hbar");
  classical.dof = classical_doc.contains("dof") ? as_int(classical_doc["dof"], "classical.dof") : 1;

  std::vector<CouplingTerm> couplings;
  ComplexMatrix h0 = matrix_from_json(require(model_doc, "h0"));
  for (const auto& term_doc : couplings_doc) {
    const json& coeff_doc = require(term_doc, "coefficient");
    if (!coeff_doc.is_array()) {
      throw ConfigParseError("coupling coefficient must be an array of polynomials");
    }
    CouplingTerm term{{}, HermitianOperator::zero(1)};
    for (const auto& factor : coeff_doc) {
      term.coefficient.push_back(polynomial(factor, "coupling coefficient"));
    }
    try {
      term.op = HermitianOperator(matrix_from_json(require(term_doc, "op")));
    } catch (const std::invalid_argument& e) {
      rethrow_as_validation(e);
    }
    couplings.push_back(std::move(term));
  }

  const json& initial_doc = require(doc, "initial");
  const RealVector q0 = real_vector(require(initial_doc, "q"), "initial.q");
  const RealVector p0 = real_vector(require(initial_doc, "p"), "initial.p");
  ComplexVector omega0 = complex_vector(require(initial_doc, "omega"), "initial.omega");

  const json& integrator_doc = require(doc, "integrator");
  IntegratorConfig integrator;
  const std::string method = as_string(require(integrator_doc, "method"), "integrator.method");
  if (method == "strang") {
    integrator.method = Method::Strang;
  } else if (method == "rk4") {
    integrator.method = Method::Rk4;
  } else {
    throw ConfigValidationError("unknown integrator method \"" + method + "\"");
  }
  integrator.dt = as_number(require(integrator_doc, "dt"), "integrator.dt");
  integrator.t_final = as_number(require(integrator_doc, "t_final"), "integrator.t_final");
  integrator.output_stride = integrator_doc.contains("output_stride")
                                 ? as_int(integrator_doc["output_stride"], "output_stride")
                                 : 1;
  StepOptions step_options;
  step_options.include_gauge_phase = optional_bool(integrator_doc, "gauge_phase", false);
  step_options.renormalize = optional_bool(integrator_doc, "renormalize", false);

  try {
    HybridHamiltonianSpec model(HermitianOperator(std::move(h0)), std::move(couplings),
                                std::move(classical));
    integrator.validate();

    const double norm = omega0.norm();
    if (norm == 0.0) throw std::invalid_argument("initial.omega has zero norm");
    const double deviation = std::abs(norm - 1.0);
    QuantumState omega = QuantumState::normalized(omega0 / norm);

    HybridState initial{ClassicalPoint{q0, p0}, std::move(omega)};
    initial.classical.validate();
    if (initial.classical.dof() != model.classical_dof()) {
      throw std::invalid_argument("initial point does not match the classical DOF count");
    }
    if (initial.omega.dim() != model.quantum_dim()) {
      throw std::invalid_argument("initial.omega does not match the quantum dimension");
    }

    RunConfig config{std::move(model),  std::move(initial), integrator, step_options,
                     {},                {},                 {},         deviation};

    if (doc.contains("observables")) {
      const json& obs_doc = doc["observables"];
      if (!obs_doc.is_array()) throw ConfigParseError("observables must be an array");
      for (const auto& entry : obs_doc) {
        const std::string name = as_string(require(entry, "name"), "observable name");
        std::vector<HybridObservable::Term> terms;
        if (entry.contains("terms")) {
          if (!entry["terms"].is_array()) {
            throw ConfigParseError("observable terms must be an array");
          }
          for (const auto& term_doc : entry["terms"]) {
            terms.push_back(HybridObservable::Term{
                phase_polynomial(require(term_doc, "coefficient"), config.model.classical_dof(),
                                 "observable coefficient"),
                HermitianOperator(matrix_from_json(require(term_doc, "op")))});
          }
        }
        PhaseSpacePolynomial classical_part =
            entry.contains("classical")
                ? phase_polynomial(entry["classical"], config.model.classical_dof(),
                                   "observable classical part")
                : PhaseSpacePolynomial::zero(config.model.classical_dof());
        HybridObservable observable(std::move(terms), std::move(classical_part));
        if (observable.quantum_dim() != 0 &&
            observable.quantum_dim() != config.model.quantum_dim()) {
          throw std::invalid_argument("observable \"" + name +
                                      "\" does not match the quantum dimension");
        }
        config.observable_names.push_back(name);
        config.observables.push_back(std::move(observable));
      }
    }

    if (doc.contains("output")) {
      config.output_path = as_string(require(doc["output"], "path"), "output.path");
    } else {
      config.output_path = "trajectory.csv";
    }
    return config;
  } catch (const std::invalid_argument& e) {
    rethrow_as_validation(e);
  }
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_document(path));
}

json serialize(const RunConfig& config) {
  json couplings = json::array();
  for (const auto& term : config.model.couplings()) {
    json factors = json::array();
    for (const auto& factor : term.coefficient) factors.push_back(polynomial_to_json(factor));
    couplings.push_back({{"coefficient", std::move(factors)},
                         {"op", matrix_to_json(term.op.matrix())}});
  }
  const auto& classical = config.model.classical();
  json observables = json::array();
  for (std::size_t i = 0; i < config.observables.size(); ++i) {
    const auto& obs = config.observables[i];
    json terms = json::array();
    for (const auto& term : obs.terms()) {
      terms.push_back({{"coefficient", phase_polynomial_to_json(term.coefficient)},
                       {"op", matrix_to_json(term.op.matrix())}});
    }
    observables.push_back({{"name", config.observable_names[i]},
                           {"terms", std::move(terms)},
                           {"classical", phase_polynomial_to_json(obs.classical_part())}});
  }
  return json{
      {"model",
       {{"h0", matrix_to_json(config.model.h0().matrix())},
        {"couplings", std::move(couplings)},
        {"classical",
         {{"potential", polynomial_to_json(classical.V)},
          {"mass", classical.params.mass},
          {"Omega", classical.params.Omega},
          {"hbar", classical.params.hbar},
          {"dof", classical.dof}}}}},
      {"initial",
       {{"q", std::vector<double>(config.initial.classical.q.begin(),
                                  config.initial.classical.q.end())},
        {"p", std::vector<double>(config.initial.classical.p.begin(),
                                  config.initial.classical.p.end())},
        {"omega", complex_vector_to_json(config.initial.omega.amplitudes())}}},
      {"integrator",
       {{"method", config.integrator.method == Method::Strang ? "strang" : "rk4"},
        {"dt", config.integrator.dt},
        {"t_final", config.integrator.t_final},
        {"output_stride", config.integrator.output_stride},
        {"gauge_phase", config.step_options.include_gauge_phase},
        {"renormalize", config.step_options.renormalize}}},
      {"observables", std::move(observables)},
      {"output", {{"path", config.output_path}}}};
}

HybridDensitySpec parse_density(const json& doc) {
  HybridDensitySpec density;
  const json& classical_doc = require(doc, "classical");
  const std::string type = as_string(require(classical_doc, "type"), "classical.type");
  if (type == "delta") {
    density.classical = DeltaClassicalDensity{
        real_vector(require(classical_doc, "q"), "classical.q"),
        real_vector(require(classical_doc, "p"), "classical.p")};
  } else if (type == "gaussian") {
    density.classical = GaussianClassicalDensity{
        real_vector(require(classical_doc, "mean_q"), "classical.mean_q"),
        real_vector(require(classical_doc, "mean_p"), "classical.mean_p"),
        real_matrix(require(classical_doc, "covariance"), "classical.covariance")};
  } else {
    throw ConfigValidationError("unknown classical density type \"" + type + "\"");
  }

  const json& quantum_doc = require(doc, "quantum");
  if (!quantum_doc.is_array()) throw ConfigParseError("quantum must be an array");
  try {
    for (const auto& component_doc : quantum_doc) {
      const ComplexVector omega =
          complex_vector(require(component_doc, "omega"), "component omega");
      density.quantum.push_back(QuantumMixtureComponent{
          as_number(require(component_doc, "weight"), "component weight"),
          QuantumState::normalized(omega)});
    }
    density.validate();
  } catch (const std::invalid_argument& e) {
    rethrow_as_validation(e);
  }
  return density;
}

HybridDensitySpec load_density(const std::string& path) {
  return parse_density(read_document(path));
}

json serialize(const HybridDensitySpec& density) {
  json classical;
  if (const auto* delta = std::get_if<DeltaClassicalDensity>(&density.classical)) {
    classical = {{"type", "delta"},
                 {"q", std::vector<double>(delta->q.begin(), delta->q.end())},
                 {"p", std::vector<double>(delta->p.begin(), delta->p.end())}};
  } else {
    const auto& g = std::get<GaussianClassicalDensity>(density.classical);
    json cov = json::array();
    for (Eigen::Index r = 0; r < g.covariance.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < g.covariance.cols(); ++c) row.push_back(g.covariance(r, c));
      cov.push_back(std::move(row));
    }
    classical = {{"type", "gaussian"},
                 {"mean_q", std::vector<double>(g.mean_q.begin(), g.mean_q.end())},
                 {"mean_p", std::vector<double>(g.mean_p.begin(), g.mean_p.end())},
                 {"covariance", std::move(cov)}};
  }
  json quantum = json::array();
  for (const auto& component : density.quantum) {
    quantum.push_back({{"weight", component.weight},
                       {"omega", complex_vector_to_json(component.omega.amplitudes())}});
  }
  return json{{"classical", std::move(classical)}, {"quantum", std::move(quantum)}};
}

}  // namespace hybridsim
