#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wsde/integrators.hpp"
#include "wsde/noise.hpp"
#include "wsde/observable.hpp"
#include "wsde/sde_model.hpp"
#include "wsde/step_control.hpp"

namespace wsde {

enum class SelectorKind { increment_control, moment_match, weighted, fixed };

/// S1..S7 pair a step-size selector with a one-step map:
///   S1 increment control + euler      S2 moment + euler      S3 weighted + euler
///   S4 moment + second order          S5 weighted + second order
///   S6 moment + modified euler        S7 weighted + modified euler
/// fixed_euler(dt) and fixed_second_order(dt) use a constant step.
struct SchemeId {
  SelectorKind selector = SelectorKind::moment_match;
  StepKind kind = StepKind::euler;
  double fixed_dt = 0.0;

  static SchemeId parse(const std::string& s);
  static SchemeId adaptive(int number);
  static SchemeId fixed(StepKind kind, double dt);
  std::string name() const;
  bool needs_weights() const { return selector == SelectorKind::weighted; }
  bool adaptive() const { return selector != SelectorKind::fixed; }
};

struct TraceEntry {
  double tau = 0.0;  // start of the step
  double dt = 0.0;
  Branch branch = Branch::unconstrained_max;
};

struct PathRecord {
  std::vector<Vector> states;  // one per reached target
  std::vector<double> times;   // node time at each reached target
  std::size_t steps = 0;
  bool diverged = false;
  std::vector<TraceEntry> trace;
};

/// Reusable single-path integrator. Not thread-safe; use one per worker.
class PathRunner {
 public:
  // Called at every target index k <= last with the state there; `diverged`
  // is set for targets that the path could not reach.
  using Visitor = std::function<void(std::size_t k, ConstVec state, bool diverged)>;

  PathRunner(SchemeId scheme, ModelPtr model, const ToleranceSet& tol, std::vector<double> targets,
             const Observable* observable = nullptr,
             VariateFamily family = VariateFamily::gaussian);

  struct Summary {
    std::size_t steps = 0;
    bool diverged = false;
  };

  Summary run(ConstVec y0, NoiseStream stream, std::size_t last_target, const Visitor& visit,
              std::vector<TraceEntry>* trace = nullptr);

  const std::vector<double>& targets() const { return targets_; }
  const SchemeId& scheme() const { return scheme_; }

 private:
  StepDecision first_decision(ConstVec y, double target);
  StepDecision next_decision(ConstVec y, double tau, double prev, double target);

  SchemeId scheme_;
  ModelPtr model_;
  ToleranceSet tol_;
  std::vector<double> targets_;
  const Observable* observable_;
  VariateFamily family_;
  CoefficientLevel level_;
  StepSelector selector_;
  LocalCoefficients coeffs_;
  ObservableWeights weights_, scratch_;
  Vector y_, next_, xi_, zeta_;
};

/// Runs one trajectory through all targets.
PathRecord run_path(const SchemeId& scheme, ModelPtr model, ConstVec y0,
                    const std::vector<double>& targets, const ToleranceSet& tol,
                    NoiseStream stream, const Observable* observable = nullptr,
                    VariateFamily family = VariateFamily::gaussian, bool trace = false);

/// Constant-step trajectory, each step capped at the next target.
PathRecord run_fixed(StepKind kind, double dt, ModelPtr model, ConstVec y0,
                     const std::vector<double>& targets, NoiseStream stream,
                     VariateFamily family = VariateFamily::gaussian, bool trace = false);

}  // namespace wsde
