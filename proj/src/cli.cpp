#include "wsde/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "wsde/bench.hpp"
#include "wsde/errors.hpp"

namespace wsde::cli {

namespace {

struct RunOptions {
  std::string experiment;
  std::vector<std::string> schemes;
  std::vector<double> tol;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> s_min, s_max, paths;
  std::optional<double> delta, as_tol, rs_tol, sfac_max, dt;
  std::string out, format = "csv", config;
};

bench::Experiment load_experiment(const RunOptions& o) {
  nlohmann::json cfg = nlohmann::json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw ConfigurationError("cannot read config '" + o.config + "'");
    try {
      in >> cfg;
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigurationError("config '" + o.config + "': " + ex.what());
    }
  }
  std::string id = o.experiment;
  if (cfg.is_object() && cfg.contains("experiment")) {
    if (id.empty()) id = cfg["experiment"].get<std::string>();
    cfg.erase("experiment");
  }
  if (id.empty()) throw ConfigurationError("no experiment given");
  auto e = bench::catalog(id);
  bench::apply_overrides(e, cfg);
  if (!o.schemes.empty()) e.schemes = o.schemes;
  if (!o.tol.empty()) e.tolerances = o.tol;
  if (o.s_min) e.sampler.s_min = *o.s_min;
  if (o.s_max) e.sampler.s_max = *o.s_max;
  if (o.delta) e.sampler.delta = *o.delta;
  if (o.as_tol) e.sampler.as_tol = *o.as_tol;
  if (o.rs_tol) e.sampler.rs_tol = *o.rs_tol;
  if (o.sfac_max) e.sampler.sfac_max = *o.sfac_max;
  if (o.paths) e.reference_paths = *o.paths;
  if (o.dt) e.reference_dt = *o.dt;
  // A lowered budget also lowers the starting sample size.
  if (o.s_max && !o.s_min && e.sampler.s_min > e.sampler.s_max) e.sampler.s_min = e.sampler.s_max;
  e.validate();
  return e;
}

void add_common(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--experiment", o.experiment, "Experiment id (see `bench list`)");
  cmd->add_option("--config", o.config, "JSON file overriding experiment fields");
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--s-min", o.s_min, "Initial sample size");
  cmd->add_option("--s-max", o.s_max, "Sample size budget");
  cmd->add_option("--delta", o.delta, "Confidence complement");
  cmd->add_option("--as-tol", o.as_tol, "Absolute sampling tolerance");
  cmd->add_option("--rs-tol", o.rs_tol, "Relative sampling tolerance");
  cmd->add_option("--sfac-max", o.sfac_max, "Sample growth factor per iteration");
  cmd->add_option("--out", o.out, "Output file (default: stdout)");
}

void write_text(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& f) {
  if (path.empty()) {
    f(out);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
  f(file);
  file.flush();
  if (!file) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weak adaptive SDE integrators: benchmark runner"};
  app.name("bench");
  app.require_subcommand(1);

  RunOptions run_opts, ref_opts;
  auto* run = app.add_subcommand("run", "Run an experiment and write a result table");
  add_common(run, run_opts);
  run->add_option("--schemes", run_opts.schemes, "Comma-separated scheme ids")->delimiter(',');
  run->add_option("--tol", run_opts.tol, "Comma-separated tolerances")->delimiter(',');
  run->add_option("--format", run_opts.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  app.add_subcommand("list", "List the builtin experiments");

  auto* ref = app.add_subcommand("reference", "Generate a fixed-step reference file");
  add_common(ref, ref_opts);
  ref->add_option("--paths", ref_opts.paths, "Number of reference paths");
  ref->add_option("--dt", ref_opts.dt, "Euler step size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (app.got_subcommand("list")) {
      for (const auto& id : bench::experiment_ids()) {
        const auto e = bench::catalog(id);
        out << id << "  problem=" << e.problem << " observable=" << e.observable
            << " metric=" << e.metric << " targets=" << e.targets.size()
            << " reference=" << bench::to_string(e.reference) << '\n';
      }
      return 0;
    }
    if (app.got_subcommand("reference")) {
      auto e = load_experiment(ref_opts);
      e.reference_seed = ref_opts.seed;
      if (ref_opts.out.empty()) throw ConfigurationError("reference needs --out");
      e.reference = bench::ReferenceKind::self;
      bench::write_reference(e, bench::reference_values(e), ref_opts.out);
      return 0;
    }
    const auto e = load_experiment(run_opts);
    const auto rows = bench::run_experiment(e, run_opts.seed, &err);
    const auto fmt = bench::parse_format(run_opts.format);
    write_text(run_opts.out, out, [&](std::ostream& o) { bench::emit(rows, fmt, o); });
    return 0;
  } catch (const std::exception& ex) {
    err << "bench: " << ex.what() << '\n';
    return 2;
  }
}

}  // namespace wsde::cli
