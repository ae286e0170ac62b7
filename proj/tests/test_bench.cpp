#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "wsde/bench.hpp"
#include "wsde/cli.hpp"
#include "wsde/errors.hpp"
#include "wsde/reference.hpp"

using namespace wsde;
using namespace wsde::bench;

namespace {

int run_cli(std::vector<std::string> args, std::string& out, std::string& err) {
  std::vector<const char*> argv{"bench"};
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int rc = cli::main(static_cast<int>(argv.size()), argv.data(), o, e);
  out = o.str();
  err = e.str();
  return rc;
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> lines;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

std::vector<std::string> split(const std::string& s, char c) {
  std::vector<std::string> f;
  std::string cur;
  for (char ch : s) {
    if (ch == c) {
      f.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  f.push_back(cur);
  return f;
}

std::string temp_path(const std::string& name) {
  return (std::string(::testing::TempDir()) + "/" + name);
}

}  // namespace

TEST(Reference, QuadratureMatchesHighPrecisionValues) {
  EXPECT_NEAR(gbm_log1p_square_mean(10, 5, 0.5), 1.95312418180594e-3, 1e-14);
  EXPECT_NEAR(gbm_log1p_square_mean(10, 5, 1.0), 2.79178379877307e-6, 1e-17);
  EXPECT_NEAR(coupled_invariant_mean(10, 2, 1, 5), 2.07675284654192, 1e-11);
  EXPECT_NEAR(coupled_invariant_mean(10, 2, 1, 10), 2.16393775113219, 1e-11);
  EXPECT_NEAR(coupled_invariant_mean(10, 2, 1, 20), 2.23352987902133, 1e-11);
}

TEST(Reference, PublishedTableAgreesToPrinterPrecision) {
  // The published gbm value differs from quadrature in the fourth digit.
  EXPECT_NEAR(gbm_log1p_square_mean(10, 5, 0.5), 1.95279045e-3, 1e-6);
  EXPECT_NEAR(coupled_invariant_mean(10, 2, 1, 5), 2.07675354, 1e-6);
  EXPECT_NEAR(coupled_invariant_mean(10, 2, 1, 10), 2.16393732, 1e-6);
  EXPECT_LT(gbm_log1p_square_mean(10, 5, 20.0), 1e-100);
}

TEST(Reference, GaussianExpectationOfPolynomials) {
  EXPECT_NEAR(gaussian_expectation([](double z) { return z * z; }), 1.0, 1e-13);
  EXPECT_NEAR(gaussian_expectation([](double z) { return std::pow(z, 4); }), 3.0, 1e-12);
  EXPECT_NEAR(gaussian_expectation([](double z) { return std::abs(z); }, {0.0}),
              std::sqrt(2 / M_PI), 1e-13);
}

TEST(Reference, AdditiveClosedForm) {
  // Deterministic part and the T = 0 limit.
  EXPECT_DOUBLE_EQ(additive_cube_mean(1.0, 2.0, 0.0), 8.0);
  EXPECT_NEAR(additive_cube_mean(1.0, 1.0, 20.0), 0.0, 1e-300);
  // Against the Gaussian law of X_t: mean m = x0 e^{-t^3/3}, var from the Ito isometry.
  for (double t : {0.5, 1.0, 1.7}) {
    const double m = std::exp(-t * t * t / 3);
    const double v = std::exp(-2 * t * t * t / 3) * (1 - 1 / (t + 1));
    EXPECT_NEAR(additive_cube_mean(1.0, 1.0, t), m * m * m + 3 * m * v, 1e-14);
  }
}

TEST(Reference, CoupledOutsideDomainIsRejected) {
  EXPECT_THROW(coupled_invariant_mean(10, 10.0, 1.0, 1.0), ConfigurationError);
}

TEST(Catalog, AllExperimentsValidate) {
  for (const auto& id : experiment_ids()) {
    const auto e = catalog(id);
    EXPECT_EQ(e.id, id);
    EXPECT_NO_THROW(e.validate()) << id;
  }
  EXPECT_THROW(catalog("nope"), ConfigurationError);
}

TEST(Catalog, ReferenceValues) {
  auto ex1 = catalog("landau_ex1");
  auto r = reference_values(ex1);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0][0], 0.660792203);
  EXPECT_EQ(r[2][0], 0.068848214);
  EXPECT_EQ(reference_values(catalog("landau_ex2"))[1][0], 0.170826812);
  auto add = reference_values(catalog("additive"));
  EXPECT_NEAR(add[2][0], 0.0, 1e-300);
  auto cpl = reference_values(catalog("coupled_ex4"));
  EXPECT_NEAR(cpl[0][0], 1.99966082909189, 1e-11);
}

TEST(Overrides, ApplyAndReject) {
  auto e = catalog("gbm");
  apply_overrides(e, nlohmann::json::parse(R"({"targets": [0.25, 0.5], "schemes": ["S2"],
      "tolerances": [0.01], "s_max": 1000, "s_min": 10, "u_fac": 0.5, "chunk": 16,
      "variates": "three_point"})"));
  EXPECT_EQ(e.targets, (std::vector<double>{0.25, 0.5}));
  EXPECT_EQ(e.schemes, (std::vector<std::string>{"S2"}));
  EXPECT_EQ(e.sampler.s_max, 1000u);
  EXPECT_EQ(e.sampler.chunk, 16u);
  EXPECT_EQ(e.u_fac, 0.5);
  EXPECT_EQ(e.family, VariateFamily::three_point);
  EXPECT_THROW(apply_overrides(e, nlohmann::json::parse(R"({"bogus": 1})")), ConfigurationError);
  EXPECT_THROW(apply_overrides(e, nlohmann::json::parse(R"({"targets": "x"})")), ConfigurationError);
}

TEST(Emit, CsvAndJsonCarryTheSameRows) {
  std::vector<ResultRow> rows{
      {"gbm", "S2", 1e-3, "eps1", 0.0171, 533.5, 100000, 7},
      {"gbm", "fixed_euler(0.0375)", std::nan(""), "eps1", HUGE_VAL, 534, 100000, 7}};
  std::ostringstream csv, js;
  emit(rows, Format::csv, csv);
  emit(rows, Format::json, js);
  const auto lines = split_lines(csv.str());
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "experiment,scheme,tol,metric,value,mean_steps,samples,seed");
  EXPECT_EQ(lines[2], "gbm,fixed_euler(0.0375),,eps1,inf,534,100000,7");
  const auto j = nlohmann::json::parse(js.str());
  ASSERT_EQ(j.size(), 2u);
  for (std::size_t r = 0; r < 2; ++r) {
    const auto f = split(lines[r + 1], ',');
    EXPECT_EQ(j[r]["experiment"], f[0]);
    EXPECT_EQ(j[r]["scheme"], f[1]);
    if (f[2].empty()) EXPECT_TRUE(j[r]["tol"].is_null());
    else EXPECT_EQ(j[r]["tol"].get<double>(), std::stod(f[2]));
    if (f[4] == "inf") EXPECT_EQ(j[r]["value"], "inf");
    else EXPECT_EQ(j[r]["value"].get<double>(), std::stod(f[4]));
    EXPECT_EQ(j[r]["mean_steps"].get<double>(), std::stod(f[5]));
    EXPECT_EQ(j[r]["samples"].get<std::uint64_t>(), std::stoull(f[6]));
    EXPECT_EQ(j[r]["seed"].get<std::uint64_t>(), std::stoull(f[7]));
  }
  EXPECT_THROW(emit({}, Format::csv, csv), ContractViolation);
  EXPECT_THROW(parse_format("xml"), ConfigurationError);
}

TEST(Emit, DoublesRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 533.55, 6.02214076e23})
    EXPECT_EQ(std::stod(format_double(x)), x);
  EXPECT_EQ(format_double(HUGE_VAL), "inf");
  EXPECT_EQ(format_double(-HUGE_VAL), "-inf");
}

TEST(RunExperiment, FixedSchemesGiveOneRow) {
  auto e = catalog("gbm");
  e.targets = {0.5};
  e.schemes = {"S2", "fixed_euler(0.01)"};
  e.tolerances = {1e-2, 1e-3};
  e.sampler.s_min = 200;
  e.sampler.s_max = 200;
  const auto rows = run_experiment(e, 3);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].scheme, "S2");
  EXPECT_EQ(rows[1].tol, 1e-3);
  EXPECT_TRUE(std::isnan(rows[2].tol));
  EXPECT_EQ(rows[2].mean_steps, 50.0);
  for (const auto& r : rows) {
    EXPECT_EQ(r.samples, 200u);
    EXPECT_TRUE(r.budget_capped || r.samples == 200u);
  }
}

TEST(Cli, List) {
  std::string out, err;
  EXPECT_EQ(run_cli({"list"}, out, err), 0);
  for (const auto& id : experiment_ids()) EXPECT_NE(out.find(id + "  problem="), std::string::npos);
}

TEST(Cli, RunIsDeterministic) {
  const std::vector<std::string> args{"run", "--experiment", "landau_ex1", "--schemes", "S2,S3",
                                      "--tol", "1e-2", "--s-min", "500", "--s-max", "500",
                                      "--seed", "11"};
  std::string a, b, err;
  ASSERT_EQ(run_cli(args, a, err), 0) << err;
  ASSERT_EQ(run_cli(args, b, err), 0) << err;
  EXPECT_EQ(a, b);
  EXPECT_EQ(split_lines(a).size(), 3u);
  auto c = args;
  c.back() = "12";
  std::string other;
  ASSERT_EQ(run_cli(c, other, err), 0);
  EXPECT_NE(a, other);
}

TEST(Cli, ConfigFileAndJsonOutput) {
  const auto cfg = temp_path("wsde_cfg.json");
  {
    std::ofstream f(cfg);
    f << R"({"experiment": "gbm", "targets": [0.5], "schemes": ["S1"], "tolerances": [0.01],
             "s_min": 100, "s_max": 100})";
  }
  const auto outp = temp_path("wsde_out.json");
  std::string out, err;
  ASSERT_EQ(run_cli({"run", "--config", cfg, "--format", "json", "--out", outp}, out, err), 0) << err;
  std::ifstream in(outp);
  const auto j = nlohmann::json::parse(in);
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["scheme"], "S1");
  EXPECT_EQ(j[0]["samples"], 100);
  std::remove(cfg.c_str());
  std::remove(outp.c_str());
}

TEST(Cli, Errors) {
  std::string out, err;
  EXPECT_EQ(run_cli({"run", "--experiment", "nope"}, out, err), 2);
  EXPECT_NE(err.find("bench: "), std::string::npos);
  EXPECT_NE(run_cli({"run", "--experiment", "gbm", "--format", "xml"}, out, err), 0);
  EXPECT_NE(run_cli({}, out, err), 0);
  EXPECT_EQ(run_cli({"run", "--experiment", "gbm", "--schemes", "S9"}, out, err), 2);
  EXPECT_EQ(run_cli({"reference", "--experiment", "duffing"}, out, err), 2);
}

TEST(Cli, ReferenceFileRoundTrip) {
  const auto ref = temp_path("wsde_ref.json");
  std::string out, err;
  ASSERT_EQ(run_cli({"reference", "--experiment", "duffing", "--paths", "200", "--dt", "0.01",
                     "--out", ref},
                    out, err),
            0)
      << err;
  std::ifstream in(ref);
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["paths"], 200);
  EXPECT_EQ(j["targets"].size(), 80u);
  EXPECT_EQ(j["values"].size(), 80u);
  auto e = catalog("duffing");
  apply_overrides(e, nlohmann::json{{"reference", "file"}, {"reference_file", ref}});
  const auto v = reference_values(e);
  EXPECT_EQ(v[3][1], j["values"][3][1].get<double>());
  std::remove(ref.c_str());
}
