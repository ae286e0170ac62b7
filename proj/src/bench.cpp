#include "wsde/bench.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "wsde/adaptive_runner.hpp"
#include "wsde/errors.hpp"
#include "wsde/reference.hpp"

namespace wsde::bench {

using nlohmann::json;

std::string to_string(ReferenceKind r) {
  switch (r) {
    case ReferenceKind::closed_form:
      return "closed_form";
    case ReferenceKind::table:
      return "table";
    case ReferenceKind::self:
      return "self";
    case ReferenceKind::file:
      return "file";
  }
  return "?";
}

namespace {

ReferenceKind parse_reference_kind(const std::string& s) {
  for (auto r : {ReferenceKind::closed_form, ReferenceKind::table, ReferenceKind::self,
                 ReferenceKind::file})
    if (to_string(r) == s) return r;
  throw ConfigurationError("unknown reference source '" + s + "'");
}

const std::vector<std::string> kAllAdaptive = {"S1", "S2", "S3", "S4", "S5", "S6", "S7"};
const std::vector<double> kTolLadder = {1e-2, 1e-3, 1e-4, 1e-5};

Experiment scalar_log_experiment(std::string id, std::string problem, ParameterMap params) {
  Experiment e;
  e.id = std::move(id);
  e.problem = std::move(problem);
  e.params = std::move(params);
  e.targets = {0.5, 1.0, 20.0};
  e.observable = "log1p_square";
  e.metric = "eps1";
  e.schemes = kAllAdaptive;
  e.tolerances = kTolLadder;
  return e;
}

}  // namespace

std::vector<std::string> experiment_ids() {
  return {"gbm", "landau_ex1", "landau_ex2", "additive", "coupled_ex3", "coupled_ex4", "duffing"};
}

Experiment catalog(const std::string& id) {
  if (id == "gbm") {
    auto e = scalar_log_experiment(id, "gbm", {{"sigma", 10.0}, {"x0", 5.0}});
    e.u_fac = 0.01;
    return e;
  }
  if (id == "landau_ex1" || id == "landau_ex2") {
    const bool ex1 = id == "landau_ex1";
    auto e = scalar_log_experiment(
        id, "landau", {{"a", ex1 ? -0.1 : 0.1}, {"sigma", 2.0}, {"x0", ex1 ? 5.0 : 0.1}});
    e.u_fac = 0.1;
    e.reference = ReferenceKind::table;
    if (ex1) e.table = {{0.660792203}, {0.43373205}, {0.068848214}};
    else e.table = {{0.107344374}, {0.170826812}, {0.112452505}};
    return e;
  }
  if (id == "additive") {
    Experiment e;
    e.id = id;
    e.problem = "additive";
    e.params = {{"sigma", 1.0}, {"x0", 1.0}};
    e.targets = {0.5, 1.0, 20.0};
    e.observable = "cube";
    e.metric = "eps2";
    e.u_fac = 0.01;
    e.schemes = kAllAdaptive;
    e.tolerances = kTolLadder;
    return e;
  }
  if (id == "coupled_ex3" || id == "coupled_ex4") {
    const bool ex3 = id == "coupled_ex3";
    Experiment e;
    e.id = id;
    e.problem = "coupled";
    e.params = {{"alpha", 10.0}, {"beta", ex3 ? 0.1 : 1.0}, {"x0_1", 2.0}, {"x0_2", 1.0}};
    e.targets = ex3 ? std::vector<double>{5.0, 10.0, 20.0} : std::vector<double>{3.0, 5.0};
    e.observable = "coupled_invariant";
    e.metric = "eps3";
    e.u_fac = 0.0;
    e.schemes = kAllAdaptive;
    e.tolerances = kTolLadder;
    if (!ex3) {
      e.sampler.as_tol = e.sampler.rs_tol = 1e-3;
      e.sampler.s_max = 100000000;
    }
    return e;
  }
  if (id == "duffing") {
    Experiment e;
    e.id = id;
    e.problem = "duffing_vdp";
    e.params = builtin_defaults("duffing_vdp");
    for (int k = 1; k <= 80; ++k) e.targets.push_back(k);
    e.observable = "coordinates";
    e.metric = "eps3";
    e.u_fac = 0.1;
    e.schemes = kAllAdaptive;
    e.tolerances = kTolLadder;
    e.sampler.s_max = 10000000;
    e.reference = ReferenceKind::self;
    return e;
  }
  throw ConfigurationError("unknown experiment '" + id + "'");
}

Observable Experiment::make_observable() const {
  if (observable == "log1p_square") return Observable({log1p_square()});
  if (observable == "cube") return Observable({cube()});
  if (observable == "coupled_invariant") return Observable({coupled_invariant()});
  if (observable == "coordinates") {
    const std::size_t d = builtin_problem(problem, params)->dim();
    std::vector<ScalarObservable> parts;
    for (std::size_t i = 0; i < d; ++i) parts.push_back(coordinate(i, d, "x" + std::to_string(i + 1)));
    return Observable(std::move(parts));
  }
  throw ConfigurationError("unknown observable '" + observable + "'");
}

Vector Experiment::initial_state() const { return builtin_initial_state(problem, params); }

void Experiment::validate() const {
  if (targets.empty()) throw ConfigurationError(id + ": no target times");
  for (std::size_t k = 0; k < targets.size(); ++k)
    if (!(targets[k] > 0.0) || (k > 0 && !(targets[k] > targets[k - 1])))
      throw ConfigurationError(id + ": target times must be positive and increasing");
  if (schemes.empty()) throw ConfigurationError(id + ": empty scheme list");
  const auto obs = make_observable();
  for (const auto& s : schemes) {
    const auto scheme = SchemeId::parse(s);
    if (scheme.adaptive() && tolerances.empty())
      throw ConfigurationError(id + ": adaptive scheme " + s + " needs a tolerance");
    if (scheme.needs_weights() && !obs.has_derivatives())
      throw ConfigurationError(id + ": " + s + " needs observable derivatives");
  }
  for (double t : tolerances)
    if (!(t > 0.0)) throw ConfigurationError(id + ": tolerances must be positive");
  if (!(u_fac >= 0.0)) throw ConfigurationError(id + ": u_fac must be non-negative");
  sampler.validate();
  if (reference == ReferenceKind::table) {
    if (table.size() != targets.size())
      throw ConfigurationError(id + ": reference table needs one row per target");
    for (const auto& row : table)
      if (row.size() != obs.count())
        throw ConfigurationError(id + ": reference table needs one value per observable");
  }
  if (reference == ReferenceKind::file && reference_file.empty())
    throw ConfigurationError(id + ": reference file not set");
  if (reference == ReferenceKind::self && (reference_paths == 0 || !(reference_dt > 0.0)))
    throw ConfigurationError(id + ": self reference needs paths and a positive step");
}

void apply_overrides(Experiment& e, const json& cfg) {
  if (!cfg.is_object()) throw ConfigurationError("config must be a JSON object");
  try {
    for (const auto& [key, v] : cfg.items()) {
      if (key == "problem") e.problem = v.get<std::string>();
      else if (key == "params")
        for (const auto& [name, value] : v.items()) e.params[name] = value.get<double>();
      else if (key == "targets") e.targets = v.get<std::vector<double>>();
      else if (key == "observable") e.observable = v.get<std::string>();
      else if (key == "metric") e.metric = v.get<std::string>();
      else if (key == "u_fac") e.u_fac = v.get<double>();
      else if (key == "schemes") e.schemes = v.get<std::vector<std::string>>();
      else if (key == "tolerances") e.tolerances = v.get<std::vector<double>>();
      else if (key == "variates") e.family = parse_variate_family(v.get<std::string>());
      else if (key == "delta") e.sampler.delta = v.get<double>();
      else if (key == "as_tol") e.sampler.as_tol = v.get<double>();
      else if (key == "rs_tol") e.sampler.rs_tol = v.get<double>();
      else if (key == "s_min") e.sampler.s_min = v.get<std::uint64_t>();
      else if (key == "s_max") e.sampler.s_max = v.get<std::uint64_t>();
      else if (key == "sfac_max") e.sampler.sfac_max = v.get<double>();
      else if (key == "uniform_rule") e.sampler.uniform_rule = v.get<bool>();
      else if (key == "independent_sets") e.sampler.independent_sets = v.get<bool>();
      else if (key == "chunk") e.sampler.chunk = v.get<std::uint64_t>();
      else if (key == "reference") e.reference = parse_reference_kind(v.get<std::string>());
      else if (key == "reference_table") e.table = v.get<std::vector<std::vector<double>>>();
      else if (key == "reference_file") {
        e.reference_file = v.get<std::string>();
        e.reference = ReferenceKind::file;
      } else if (key == "reference_paths") e.reference_paths = v.get<std::uint64_t>();
      else if (key == "reference_dt") e.reference_dt = v.get<double>();
      else if (key == "reference_seed") e.reference_seed = v.get<std::uint64_t>();
      else throw ConfigurationError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& ex) {
    throw ConfigurationError(std::string("bad config value: ") + ex.what());
  }
}

double reference_value(const std::string& problem, const ParameterMap& params, double t) {
  ParameterMap p = builtin_defaults(problem);
  for (const auto& [k, v] : params) {
    if (!p.count(k)) throw ConfigurationError("unknown parameter '" + k + "' for " + problem);
    p[k] = v;
  }
  if (problem == "gbm") return gbm_log1p_square_mean(p["sigma"], p["x0"], t);
  if (problem == "additive") return additive_cube_mean(p["sigma"], p["x0"], t);
  if (problem == "coupled") return coupled_invariant_mean(p["alpha"], p["x0_1"], p["x0_2"], t);
  throw ConfigurationError("no closed-form reference for '" + problem + "'");
}

namespace {

std::vector<std::vector<double>> read_reference_file(const Experiment& e, std::size_t parts) {
  std::ifstream in(e.reference_file);
  if (!in) throw ConfigurationError("cannot read reference file '" + e.reference_file + "'");
  json j;
  try {
    in >> j;
    const auto targets = j.at("targets").get<std::vector<double>>();
    auto values = j.at("values").get<std::vector<std::vector<double>>>();
    if (targets.size() != values.size())
      throw ConfigurationError("reference file: targets and values differ in length");
    // Pick the rows matching the experiment's targets.
    std::vector<std::vector<double>> out;
    for (double t : e.targets) {
      std::size_t i = 0;
      while (i < targets.size() && std::abs(targets[i] - t) > 1e-12 * std::max(1.0, t)) ++i;
      if (i == targets.size())
        throw ConfigurationError("reference file has no value for T=" + format_double(t));
      if (values[i].size() != parts)
        throw ConfigurationError("reference file: wrong number of observables");
      out.push_back(values[i]);
    }
    return out;
  } catch (const json::exception& ex) {
    throw ConfigurationError(std::string("bad reference file: ") + ex.what());
  }
}

std::vector<std::vector<double>> self_reference(const Experiment& e) {
  auto model = builtin_problem(e.problem, e.params);
  SamplerConfig cfg = e.sampler;
  cfg.s_min = cfg.s_max = e.reference_paths;
  const auto src = sde_path_source(SchemeId::fixed(StepKind::euler, e.reference_dt), model,
                                   e.initial_state(), e.targets,
                                   ToleranceSet::uniform(model->dim(), 1e-2), e.make_observable(),
                                   e.reference_seed, e.family);
  const auto est = adaptive_estimate(src, cfg);
  std::vector<std::vector<double>> out;
  for (const auto& t : est.targets) out.push_back(t.mean);
  return out;
}

}  // namespace

std::vector<std::vector<double>> reference_values(const Experiment& e) {
  const std::size_t parts = e.make_observable().count();
  switch (e.reference) {
    case ReferenceKind::closed_form: {
      if (parts != 1) throw ConfigurationError(e.id + ": closed forms cover scalar observables");
      std::vector<std::vector<double>> out;
      for (double t : e.targets) out.push_back({reference_value(e.problem, e.params, t)});
      return out;
    }
    case ReferenceKind::table:
      if (e.table.size() != e.targets.size())
        throw ConfigurationError(e.id + ": reference table needs one row per target");
      return e.table;
    case ReferenceKind::file:
      return read_reference_file(e, parts);
    case ReferenceKind::self:
      return self_reference(e);
  }
  throw ConfigurationError("missing reference");
}

double error_metric(const EstimateResult& est, const std::vector<std::vector<double>>& ref) {
  if (ref.size() != est.targets.size()) throw ContractViolation("reference has wrong length");
  double err = 0.0;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const auto& mean = est.targets[k].mean;
    if (mean.size() != ref[k].size()) throw ContractViolation("reference has wrong width");
    for (std::size_t j = 0; j < mean.size(); ++j) {
      const double e = std::abs(mean[j] - ref[k][j]);
      if (!std::isfinite(mean[j])) return std::numeric_limits<double>::infinity();
      err = std::max(err, e);
    }
  }
  return err;
}

std::vector<ResultRow> run_experiment(const Experiment& e, std::uint64_t seed, std::ostream* log) {
  e.validate();
  const auto ref = reference_values(e);
  auto model = builtin_problem(e.problem, e.params);
  const auto obs = e.make_observable();
  const auto y0 = e.initial_state();
  std::vector<ResultRow> rows;
  for (const auto& name : e.schemes) {
    const auto scheme = SchemeId::parse(name);
    std::vector<double> tols = e.tolerances;
    if (!scheme.adaptive()) tols = {std::numeric_limits<double>::quiet_NaN()};
    for (double tol : tols) {
      const auto start = std::chrono::steady_clock::now();
      auto ts = ToleranceSet::uniform(model->dim(), scheme.adaptive() ? tol : 1e-2);
      ts.u_fac = e.u_fac;
      const auto src = sde_path_source(scheme, model, y0, e.targets, ts, obs, seed, e.family);
      const auto est = adaptive_estimate(src, e.sampler);
      ResultRow row;
      row.experiment = e.id;
      row.scheme = scheme.name();
      row.tol = tol;
      row.metric = e.metric;
      row.value = error_metric(est, ref);
      row.mean_steps = est.mean_steps;
      row.samples = est.targets.front().samples;
      row.seed = seed;
      row.budget_capped = est.budget_capped;
      row.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (log)
        *log << e.id << ' ' << row.scheme << " tol=" << format_double(tol)
             << " value=" << format_double(row.value) << " steps=" << format_double(row.mean_steps)
             << " samples=" << row.samples << (row.budget_capped ? " budget-capped" : "")
             << " wall=" << row.wall_seconds << "s\n";
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw ConfigurationError("unknown format '" + s + "'");
}

namespace {

// Non-finite numbers are written as strings so the output stays valid JSON.
nlohmann::ordered_json number_or_string(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return format_double(x);
  return x;
}

}  // namespace

void emit(const std::vector<ResultRow>& rows, Format format, std::ostream& out) {
  if (rows.empty()) throw ContractViolation("no result rows to write");
  if (format == Format::csv) {
    out << "experiment,scheme,tol,metric,value,mean_steps,samples,seed\n";
    for (const auto& r : rows) {
      out << r.experiment << ',' << r.scheme << ',' << (std::isnan(r.tol) ? "" : format_double(r.tol))
          << ',' << r.metric << ',' << format_double(r.value) << ','
          << format_double(r.mean_steps) << ',' << r.samples << ',' << r.seed << '\n';
    }
    return;
  }
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    auto o = nlohmann::ordered_json::object();
    o["experiment"] = r.experiment;
    o["scheme"] = r.scheme;
    o["tol"] = number_or_string(r.tol);
    o["metric"] = r.metric;
    o["value"] = number_or_string(r.value);
    o["mean_steps"] = number_or_string(r.mean_steps);
    o["samples"] = r.samples;
    o["seed"] = r.seed;
    o["budget_capped"] = r.budget_capped;
    arr.push_back(std::move(o));
  }
  // nlohmann prints doubles round-trippably (shortest form).
  out << arr.dump(2) << '\n';
}

void emit(const std::vector<ResultRow>& rows, Format format, const std::string& path) {
  if (rows.empty()) throw ContractViolation("no result rows to write");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  emit(rows, format, out);
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

void write_reference(const Experiment& e, const std::vector<std::vector<double>>& values,
                     const std::string& path) {
  json j;
  j["experiment"] = e.id;
  j["targets"] = e.targets;
  j["values"] = values;
  j["paths"] = e.reference_paths;
  j["dt"] = e.reference_dt;
  j["seed"] = e.reference_seed;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace wsde::bench
