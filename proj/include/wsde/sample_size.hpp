#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "wsde/adaptive_runner.hpp"

namespace wsde {

/// Neumaier-compensated sum.
class CompensatedSum {
 public:
  void add(double x);
  void merge(const CompensatedSum& o);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct MomentSummary {
  double f1 = 0.0, f2 = 0.0, f3 = 0.0, f4 = 0.0;  // sample means of x, x^2, x|x|, |x|^3
  double sigma = 0.0;                             // sqrt(max(0, f2 - f1^2))
  std::uint64_t count = 0;
};

/// Running sums of x, x^2, x|x| and |x|^3.
class MomentAccumulator {
 public:
  void add(double x);
  void add_diverged() { ++diverged_; }
  void merge(const MomentAccumulator& o);
  std::uint64_t count() const { return n_; }
  std::uint64_t diverged() const { return diverged_; }
  MomentSummary summary() const;

 private:
  CompensatedSum f_[4];
  std::uint64_t n_ = 0;
  std::uint64_t diverged_ = 0;
};

struct SamplerConfig {
  double delta = 0.01;
  double as_tol = 1e-4;
  double rs_tol = 1e-4;
  std::uint64_t s_min = 100000;
  std::uint64_t s_max = 1000000000;
  double sfac_max = 120.0;
  // Every target gets max_k S_k^new instead of the shrinking-horizon update.
  bool uniform_rule = false;
  // Each target gets its own path set instead of sharing trajectories.
  bool independent_sets = false;
  // 0: WSDE_WORKERS from the environment, else hardware concurrency.
  unsigned workers = 0;
  // Paths per work item. Results do not depend on the worker count, but do
  // depend on this value.
  std::uint64_t chunk = 1024;

  void validate() const;
};

/// sqrt(2/pi) s/(e sqrt(S) + sqrt(2 s^2 + e^2 S)) exp(-e^2 S/(2 s^2))
///   + (f4 + |f1| f2 - 2 f1 f3) / (sqrt(S) (s + e sqrt(S))^3)
double bikelis_lhs(double eps, double sigma, double f1, double f2, double f3, double f4, double s);

/// Smallest integer S >= 1 with bikelis_lhs(S) <= delta/2.
std::uint64_t solve_sample_size(double eps, double sigma, double f1, double f2, double f3,
                                double f4, double delta);

/// Produces observable values along numbered paths.
class PathSimulator {
 public:
  using Sink = std::function<void(std::size_t k, ConstVec values, bool diverged)>;
  virtual ~PathSimulator() = default;
  // Simulates path `path` through target index `last`; returns the step count.
  virtual std::size_t simulate(std::uint64_t path, std::size_t last, const Sink& sink) = 0;
};

struct PathSource {
  std::size_t targets = 1;      // M
  std::size_t observables = 1;  // J
  // Creates one simulator per worker.
  std::function<std::unique_ptr<PathSimulator>()> make;
};

/// Paths of an SDE scheme, keyed by (seed, path index).
PathSource sde_path_source(SchemeId scheme, ModelPtr model, Vector y0, std::vector<double> targets,
                           ToleranceSet tol, Observable observable, std::uint64_t seed,
                           VariateFamily family = VariateFamily::gaussian,
                           std::function<void(std::uint64_t path, MutVec y0)> initial = {});

struct TargetEstimate {
  std::vector<double> mean;   // per observable
  std::vector<double> eps;    // AS + RS |mean|
  std::vector<double> sigma;  // sample standard deviation
  std::uint64_t samples = 0;
  std::uint64_t required = 0;  // last S_new (max over observables)
  std::uint64_t diverged = 0;
  bool budget_capped = false;
};

struct EstimateResult {
  std::vector<TargetEstimate> targets;
  std::vector<std::vector<std::uint64_t>> history;  // S_k after each update, starting with S_min
  std::vector<std::size_t> horizon;                 // M* used in each iteration
  std::size_t iterations = 0;
  double mean_steps = 0.0;  // over paths that ran to the last target
  std::uint64_t full_paths = 0;
  double divergence_fraction = 0.0;
  bool budget_capped = false;
};

/// Adaptive Monte-Carlo sample sizes per target time with a shrinking horizon.
EstimateResult adaptive_estimate(const PathSource& source, const SamplerConfig& cfg);

/// Worker count used when cfg.workers is 0.
unsigned default_workers();

}  // namespace wsde
