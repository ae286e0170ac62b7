#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "wsde/noise.hpp"
#include "wsde/observable.hpp"
#include "wsde/sample_size.hpp"
#include "wsde/sde_model.hpp"

namespace wsde::bench {

enum class ReferenceKind {
  closed_form,  // quadrature or exact formula
  table,        // stored values
  self,         // fine fixed-step Euler run
  file,         // JSON file with "targets" and "values"
};
std::string to_string(ReferenceKind r);

struct Experiment {
  std::string id;
  std::string problem;
  ParameterMap params;
  std::vector<double> targets;
  std::string observable;  // log1p_square, cube, coupled_invariant, coordinates
  std::string metric;      // eps1, eps2, eps3
  double u_fac = 0.0;
  std::vector<std::string> schemes;
  std::vector<double> tolerances;
  SamplerConfig sampler;
  VariateFamily family = VariateFamily::gaussian;

  ReferenceKind reference = ReferenceKind::closed_form;
  std::vector<std::vector<double>> table;  // [k][j] for ReferenceKind::table
  std::string reference_file;
  std::uint64_t reference_paths = 1000000;
  double reference_dt = 1e-3;
  std::uint64_t reference_seed = 1;

  Observable make_observable() const;
  Vector initial_state() const;
  /// Throws ConfigurationError on inconsistent settings.
  void validate() const;
};

std::vector<std::string> experiment_ids();
Experiment catalog(const std::string& id);

/// Applies the keys of a JSON object to `exp`. Unknown keys are errors.
void apply_overrides(Experiment& exp, const nlohmann::json& cfg);

/// Closed-form reference E phi(X_T) for problems that have one.
double reference_value(const std::string& problem, const ParameterMap& params, double t);

/// Reference values [k][j] for every target and observable part.
std::vector<std::vector<double>> reference_values(const Experiment& exp);

struct ResultRow {
  std::string experiment;
  std::string scheme;
  double tol = 0.0;  // NaN for fixed-step schemes
  std::string metric;
  double value = 0.0;  // +inf when a path diverged
  double mean_steps = 0.0;
  std::uint64_t samples = 0;  // achieved sample size at the first target
  std::uint64_t seed = 0;
  bool budget_capped = false;
  double wall_seconds = 0.0;
};

/// Rows for every (scheme, tol) pair. Fixed-step schemes give one row each.
std::vector<ResultRow> run_experiment(const Experiment& exp, std::uint64_t seed,
                                      std::ostream* log = nullptr);

/// Error metric: max over targets and observable parts of |estimate - reference|.
double error_metric(const EstimateResult& est, const std::vector<std::vector<double>>& ref);

enum class Format { csv, json };
Format parse_format(const std::string& s);

void emit(const std::vector<ResultRow>& rows, Format format, std::ostream& out);
void emit(const std::vector<ResultRow>& rows, Format format, const std::string& path);

/// Shortest round-trip form; "inf", "-inf" or "nan" for non-finite values.
std::string format_double(double x);

/// Writes {"experiment", "targets", "values", "paths", "dt", "seed"} for a
/// reference produced by reference_values.
void write_reference(const Experiment& exp, const std::vector<std::vector<double>>& values,
                     const std::string& path);

}  // namespace wsde::bench
