// Acceptance checks. `acceptance` runs all of them; `acceptance N...` runs
// the listed ones. Each prints one "C<n> PASS|FAIL: ..." line.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "wsde/adaptive_runner.hpp"
#include "wsde/bench.hpp"
#include "wsde/cli.hpp"
#include "wsde/integrators.hpp"
#include "wsde/sample_size.hpp"
#include "wsde/step_control.hpp"

using namespace wsde;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

bool within(double x, double want, double rel) { return std::abs(x - want) <= rel * want; }

double mean_steps(const std::string& problem, const ParameterMap& params, int scheme, double tol,
                  double u_fac, const std::vector<double>& targets, int paths, std::uint64_t seed) {
  auto model = builtin_problem(problem, params);
  const Vector y0 = builtin_initial_state(problem, params);
  auto ts = ToleranceSet::uniform(model->dim(), tol);
  ts.u_fac = u_fac;
  const Observable obs({log1p_square()});
  PathRunner runner(SchemeId::adaptive(scheme), model, ts, targets, &obs);
  double total = 0;
  for (int p = 0; p < paths; ++p)
    total += static_cast<double>(
        runner.run(y0, NoiseStream(seed, p), targets.size() - 1, [](auto, auto, auto) {}).steps);
  return total / paths;
}

// Mean step counts on gbm(10, 5) over 1e4 paths.
void criterion1(Outcome& o) {
  const ParameterMap p{{"sigma", 10.0}, {"x0", 5.0}};
  const std::vector<double> targets{0.5, 1.0, 20.0};
  const double s1 = mean_steps("gbm", p, 1, 1e-2, 0.01, targets, 10000, 1);
  const double s2 = mean_steps("gbm", p, 2, 1e-2, 0.01, targets, 10000, 1);
  const double s2f = mean_steps("gbm", p, 2, 1e-5, 0.01, targets, 10000, 1);
  o.detail << "S1@1e-2=" << s1 << " (1599.68) S2@1e-2=" << s2 << " (533.55) S2@1e-5=" << s2f
           << " (1690.55) ";
  o.check(within(s1, 1599.68, 0.1), "S1 steps");
  o.check(within(s2, 533.55, 0.1), "S2 steps");
  o.check(within(s2f, 1690.55, 0.1), "S2 fine steps");
}

// Landau example 1 step counts at Tol = 1e-3.
void criterion2(Outcome& o) {
  const auto e = bench::catalog("landau_ex1");
  const double s2 = mean_steps(e.problem, e.params, 2, 1e-3, e.u_fac, e.targets, 10000, 1);
  const double s4 = mean_steps(e.problem, e.params, 4, 1e-3, e.u_fac, e.targets, 10000, 1);
  o.detail << "S2=" << s2 << " (425.5) S4=" << s4 << " (384.32) ";
  o.check(within(s2, 425.5, 0.1), "S2 steps");
  o.check(within(s4, 384.32, 0.1), "S4 steps");
}

double run_metric(bench::Experiment e, const std::string& scheme, double tol, std::uint64_t seed,
                  std::uint64_t s_min, std::uint64_t s_max) {
  e.schemes = {scheme};
  e.tolerances = {tol};
  e.sampler.s_min = s_min;
  e.sampler.s_max = s_max;
  return bench::run_experiment(e, seed, &std::cerr).at(0).value;
}

// Error reproduction with the sample budget capped at 1e6.
void criterion3(Outcome& o) {
  const double g = run_metric(bench::catalog("gbm"), "S2", 1e-3, 1, 100000, 1000000);
  const double a = run_metric(bench::catalog("additive"), "S4", 1e-3, 1, 100000, 1000000);
  o.detail << "gbm S2 eps1=" << g << " in [0.005, 0.05]; additive S4 eps2=" << a
           << " in [0.001, 0.01] ";
  o.check(g >= 0.005 && g <= 0.05, "gbm band");
  o.check(a >= 0.001 && a <= 0.01, "additive band");
}

// Error at Tol = 1e-4 is no larger than at Tol = 1e-2 in at least 9 of 10 seeds.
void criterion4(Outcome& o) {
  for (const std::string id : {"gbm", "landau_ex1"}) {
    auto e = bench::catalog(id);
    e.schemes = {"S1", "S2", "S3", "S4", "S5", "S6", "S7"};
    e.tolerances = {1e-2, 1e-4};
    e.sampler.s_min = e.sampler.s_max = 100000;
    std::map<std::string, int> good;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto rows = bench::run_experiment(e, seed, &std::cerr);
      std::map<std::string, std::map<double, double>> err;
      for (const auto& r : rows) err[r.scheme][r.tol] = r.value;
      for (auto& [s, v] : err)
        if (v[1e-4] <= v[1e-2]) ++good[s];
    }
    o.detail << id << ":";
    for (const auto& s : e.schemes) {
      o.detail << ' ' << s << '=' << good[s] << "/10";
      o.check(good[s] >= 9, id + " " + s);
    }
    o.detail << "; ";
  }
}

// Fixed-step Euler diverges where the moment-matching scheme with a similar
// step count does not.
void criterion5(Outcome& o) {
  auto e = bench::catalog("gbm");
  e.schemes = {"fixed_euler(0.0375)", "S2"};
  e.tolerances = {1e-2};
  e.sampler.s_min = e.sampler.s_max = 100000;
  const auto rows = bench::run_experiment(e, 1, &std::cerr);
  const auto& f = rows.at(0);
  const auto& s = rows.at(1);
  o.detail << "fixed eps1=" << f.value << " steps=" << f.mean_steps << "; S2 eps1=" << s.value
           << " steps=" << s.mean_steps << ' ';
  o.check(f.value > 10 || std::isinf(f.value), "fixed euler should diverge");
  o.check(s.value < 0.1, "S2 error");
  o.check(within(s.mean_steps, f.mean_steps, 0.1), "comparable step counts");
}

// Closed-form conditional moments against Monte Carlo, and the second-moment
// expansion against exact Ito-integral moments.
void criterion6(Outcome& o) {
  struct Case {
    std::string problem;
    double t, x;
  };
  const Case cases[] = {{"gbm", 0.0, 5.0}, {"additive", 0.5, 1.0}};
  const double dt = 1e-3;
  const int n = 10000000;
  double worst = 0;
  for (const auto& c : cases) {
    auto m = builtin_problem(c.problem);
    const Vector y{c.x};
    LocalCoefficients lc(1, 1);
    m->evaluate(c.t, y, CoefficientLevel::full, lc);
    for (auto kind : {StepKind::euler, StepKind::euler_modified, StepKind::second_order}) {
      const auto want = conditional_moments(kind, *m, c.t, y, dt);
      double s1 = 0, s2 = 0, s4 = 0;
      Vector xi(1), zeta(1), next(1);
      for (int p = 0; p < n; ++p) {
        NoiseStream s(6, p);
        if (kind == StepKind::second_order) {
          weak_variates(s, VariateFamily::gaussian, xi, zeta);
          second_order_step(lc, y, dt, xi, zeta, next);
        } else {
          brownian_increments(s, dt, xi);
          if (kind == StepKind::euler) euler_step(lc, y, dt, xi, next);
          else euler_modified_step(lc, y, dt, xi, next);
        }
        const double d = next[0] - y[0], d2 = d * d;
        s1 += d;
        s2 += d2;
        s4 += d2 * d2;
      }
      const double m1 = s1 / n, m2 = s2 / n;
      const double se1 = std::sqrt((m2 - m1 * m1) / n), se2 = std::sqrt((s4 / n - m2 * m2) / n);
      const double z1 = std::abs(m1 - want.mean[0]) / se1;
      const double z2 = std::abs(m2 - want.second(0, 0)) / se2;
      worst = std::max({worst, z1, z2});
      o.check(z1 <= 4 && z2 <= 4, c.problem + " " + to_string(kind));
    }
  }
  o.detail << "max |z| = " << worst << " (limit 4); ";

  double rel = 0;
  for (const std::string name : {"gbm", "additive"}) {
    auto m = builtin_problem(name);
    for (double t : {0.0, 0.4, 1.3})
      for (double x : {-1.5, 0.7, 5.0})
        for (double h : {1e-3, 1e-2, 0.1}) {
          const Vector y{x};
          const double b = m->drift(t, y)[0], s = m->diffusion(t, y, 0)[0];
          const double e2 = oracle::taylor_second_moment(*m, t, x, h);
          const double lhs = e2 - s * s * h - b * b * h * h;
          const double rhs = t2_tensor(*m, t, y)(0, 0) * h * h +
                             t3_tensor(*m, t, y)(0, 0) * h * h * h +
                             t4_tensor(*m, t, y)(0, 0) * std::pow(h, 4);
          rel = std::max(rel, std::abs(lhs - rhs) / std::max(1.0, e2));
        }
  }
  o.detail << "expansion residual " << rel << " (limit 1e-10)";
  o.check(rel <= 1e-10, "second-moment expansion");
}

// Selector roots and the increment bound on random model points.
void criterion7(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> ud(-6.0, 0.0);
  double worst_at = 0, worst_beyond = HUGE_VAL;
  int unclamped = 0;
  for (int i = 0; i < 200; ++i) {
    auto p = oracle::random_point(rng);
    p.tol.u_fac = 0.01;
    const std::size_t d = p.model->dim();
    Vector g(d);
    Matrix h(d, d);
    for (auto& v : g) v = n01(rng);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b <= a; ++b) h(a, b) = h(b, a) = n01(rng);
    oracle::Oracle orc(p);
    const double deltas[3] = {delta_increment_control(*p.model, p.t, p.y, p.tol),
                              delta_moment_match(*p.model, p.t, p.y, p.tol),
                              delta_weighted(*p.model, p.t, p.y, p.tol, g, h)};
    const std::function<double(double)> fns[3] = {
        [&](double x) { return orc.increment(x); }, [&](double x) { return orc.moment(x); },
        [&](double x) { return orc.weighted(x, g, h); }};
    for (int s = 0; s < 3; ++s) {
      worst_at = std::max(worst_at, fns[s](deltas[s]));
      if (fns[s](1.0) > 0.0) {
        ++unclamped;
        worst_beyond = std::min(worst_beyond, fns[s](1.0001 * deltas[s]));
      } else {
        o.check(deltas[s] == p.tol.delta_max, "zero discrepancy gives delta_max");
      }
    }
  }
  o.detail << "max L(delta*) = " << worst_at << ", min L(1.0001 delta*) = " << worst_beyond
           << " over " << unclamped << " unclamped; ";
  o.check(worst_at <= 1 + 1e-12, "L(delta*) <= 1");
  o.check(worst_beyond > 1, "L(1.0001 delta*) > 1");

  double worst_ratio = 0;
  for (int i = 0; i < 200; ++i) {
    auto p = oracle::random_point(rng);
    const double delta = std::pow(10.0, ud(rng));
    oracle::Oracle orc(p);
    const auto mom = conditional_moments(StepKind::euler, *p.model, p.t, p.y, delta);
    double lhs = 0;
    for (std::size_t a = 0; a < p.y.size(); ++a)
      for (std::size_t b = 0; b < p.y.size(); ++b)
        lhs = std::max(lhs, std::abs(mom.second(a, b) / (2 * orc.dt[a] * orc.dt[b])));
    const auto& m = *p.model;
    double diff = 0;
    for (std::size_t k = 0; k < m.noise_dim(); ++k)
      diff += std::pow(oracle::linf(orc.scaled(m.diffusion(p.t, p.y, k), orc.dt)), 2);
    const double rhs = 0.5 * delta * delta *
                           std::pow(oracle::linf(orc.scaled(m.drift(p.t, p.y), orc.d)), 2) +
                       0.5 * delta * diff;
    if (rhs > 0) worst_ratio = std::max(worst_ratio, lhs / rhs);
  }
  o.detail << "increment bound ratio " << worst_ratio << " (limit 1)";
  o.check(worst_ratio <= 1 + 1e-12, "increment bound");
}

// Least-squares slope of log|y| against log x.
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(std::abs(y[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Weak order of the fixed-step maps on the linear SDE, using the exact
// solution on the same Brownian path as a control variate.
void criterion8(Outcome& o) {
  const double a = 0.5, sigma = 0.5, T = 1.0;
  auto model = builtin_problem("linear", {{"a", a}, {"sigma", sigma}});
  const int paths = 1000000;
  for (auto kind : {StepKind::euler, StepKind::second_order}) {
    std::vector<double> dts, bias;
    for (int n : {4, 8, 16, 32}) {
      const double dt = T / n;
      PathRunner runner(SchemeId::fixed(kind, dt), model, ToleranceSet::uniform(1, 1e-2), {T});
      double s = 0, s2 = 0;
      for (int p = 0; p < paths; ++p) {
        double y = 0;
        runner.run(Vector{1.0}, NoiseStream(8, p), 0, [&](auto, ConstVec v, auto) { y = v[0]; });
        double w = 0;
        for (int k = 0; k < n; ++k) w += NoiseStream(8, p, k).normal(0);
        w *= std::sqrt(dt);
        const double x = std::exp((a - sigma * sigma / 2) * T + sigma * w);
        const double diff = y * y - x * x;
        s += diff;
        s2 += diff * diff;
      }
      const double mean = s / paths, se = std::sqrt((s2 / paths - mean * mean) / paths);
      dts.push_back(dt);
      bias.push_back(mean);
      o.detail << to_string(kind) << " dt=1/" << n << " bias=" << mean << "+-" << se << ' ';
    }
    const double order = slope(dts, bias);
    const double want = kind == StepKind::euler ? 1.0 : 2.0;
    o.detail << "order " << order << "; ";
    o.check(std::abs(order - want) <= 0.3, to_string(kind) + " order");
  }
}

class GaussianSim final : public PathSimulator {
 public:
  GaussianSim(std::vector<double> mu, std::vector<double> sd, std::uint64_t seed)
      : mu_(std::move(mu)), sd_(std::move(sd)), seed_(seed) {}
  std::size_t simulate(std::uint64_t path, std::size_t last, const Sink& sink) override {
    NoiseStream s(seed_, path);
    for (std::size_t k = 0; k <= last; ++k) {
      const double v = mu_[k] + sd_[k] * s.normal(static_cast<std::uint32_t>(k));
      sink(k, ConstVec(&v, 1), false);
    }
    return last + 1;
  }

 private:
  std::vector<double> mu_, sd_;
  std::uint64_t seed_;
};

// Coverage of the sampler's confidence statement on a synthetic Gaussian stream.
void criterion9(Outcome& o) {
  const std::vector<double> mu{1.0, 0.5, -2.0}, sd{1.0, 2.0, 0.5};
  SamplerConfig cfg;
  cfg.delta = 0.01;
  cfg.as_tol = cfg.rs_tol = 1e-2;
  cfg.s_min = 1000;
  cfg.workers = 1;
  int covered = 0, total = 0;
  bool monotone = true;
  for (int rep = 0; rep < 200; ++rep) {
    PathSource src;
    src.targets = mu.size();
    src.observables = 1;
    src.make = [&, rep] { return std::make_unique<GaussianSim>(mu, sd, 5000 + rep); };
    const auto r = adaptive_estimate(src, cfg);
    for (std::size_t k = 0; k < mu.size(); ++k) {
      ++total;
      if (std::abs(r.targets[k].mean[0] - mu[k]) <= r.targets[k].eps[0]) ++covered;
    }
    for (const auto& h : r.history)
      for (std::size_t k = 1; k < h.size(); ++k) monotone = monotone && h[k] <= h[k - 1];
  }
  const double cov = static_cast<double>(covered) / total;
  o.detail << "coverage " << covered << '/' << total << " = " << cov
           << (monotone ? ", S_k non-increasing in k" : ", S_k not monotone");
  o.check(cov >= 0.99, "coverage");
  o.check(monotone, "monotone S_k");
}

std::string run_cli_to_file(const std::string& workers, const std::string& path) {
  setenv("WSDE_WORKERS", workers.c_str(), 1);
  const char* argv[] = {"bench",   "run",   "--experiment", "landau_ex1", "--schemes", "S2,S3,S5",
                        "--tol",   "1e-2",  "--s-min",      "20000",      "--s-max",   "20000",
                        "--seed",  "42",    "--out",        path.c_str()};
  std::ostringstream out, err;
  const int rc = cli::main(static_cast<int>(std::size(argv)), argv, out, err);
  if (rc != 0) return "exit " + std::to_string(rc) + ": " + err.str();
  std::ifstream in(path, std::ios::binary);
  std::ostringstream body;
  body << in.rdbuf();
  std::remove(path.c_str());
  return body.str();
}

// Identical flags and seed give identical bytes for any worker count.
void criterion10(Outcome& o) {
  const std::string base = "/tmp/wsde_acceptance_c10_";
  const auto a = run_cli_to_file("1", base + "a.csv");
  const auto b = run_cli_to_file("1", base + "b.csv");
  const auto c = run_cli_to_file("4", base + "c.csv");
  unsetenv("WSDE_WORKERS");
  o.detail << a.size() << " bytes; ";
  o.check(a.rfind("experiment,", 0) == 0, "csv header");
  o.check(a == b, "repeat run");
  o.check(a == c, "4 workers vs 1");
  o.detail << (a == b && a == c ? "identical" : "differ");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<void (*)(Outcome&)> all = {criterion1, criterion2, criterion3, criterion4,
                                               criterion5, criterion6, criterion7, criterion8,
                                               criterion9, criterion10};
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty())
    for (int i = 1; i <= 10; ++i) which.push_back(i);
  bool ok = true;
  for (int n : which) {
    if (n < 1 || n > 10) {
      std::cerr << "unknown criterion " << n << '\n';
      return 2;
    }
    Outcome o;
    try {
      all[n - 1](o);
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail << "error: " << ex.what();
    }
    std::cout << 'C' << n << (o.pass ? " PASS: " : " FAIL: ") << o.detail.str() << std::endl;
    ok = ok && o.pass;
  }
  return ok ? 0 : 1;
}
