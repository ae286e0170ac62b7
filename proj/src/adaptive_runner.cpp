#include "wsde/adaptive_runner.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>

#include "wsde/errors.hpp"

namespace wsde {

SchemeId SchemeId::adaptive(int number) {
  switch (number) {
    case 1:
      return {SelectorKind::increment_control, StepKind::euler};
    case 2:
      return {SelectorKind::moment_match, StepKind::euler};
    case 3:
      return {SelectorKind::weighted, StepKind::euler};
    case 4:
      return {SelectorKind::moment_match, StepKind::second_order};
    case 5:
      return {SelectorKind::weighted, StepKind::second_order};
    case 6:
      return {SelectorKind::moment_match, StepKind::euler_modified};
    case 7:
      return {SelectorKind::weighted, StepKind::euler_modified};
    default:
      throw ConfigurationError("adaptive schemes are numbered 1 to 7");
  }
}

SchemeId SchemeId::fixed(StepKind kind, double dt) {
  if (!(dt > 0.0)) throw ConfigurationError("fixed step must be positive");
  if (kind == StepKind::euler_modified)
    throw ConfigurationError("fixed-step baselines are euler and second_order");
  return {SelectorKind::fixed, kind, dt};
}

SchemeId SchemeId::parse(const std::string& s) {
  if (s.size() == 2 && (s[0] == 'S' || s[0] == 's') && s[1] >= '1' && s[1] <= '7')
    return adaptive(s[1] - '0');
  auto open = s.find('('), close = s.rfind(')');
  if (open != std::string::npos && close == s.size() - 1 && close > open + 1) {
    const std::string head = s.substr(0, open), arg = s.substr(open + 1, close - open - 1);
    char* end = nullptr;
    const double dt = std::strtod(arg.c_str(), &end);
    if (end == arg.c_str() || *end != '\0') throw ConfigurationError("bad step in '" + s + "'");
    if (head == "fixed_euler") return fixed(StepKind::euler, dt);
    if (head == "fixed_second_order") return fixed(StepKind::second_order, dt);
  }
  throw ConfigurationError("unknown scheme '" + s + "'");
}

std::string SchemeId::name() const {
  if (selector == SelectorKind::fixed) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, fixed_dt);
    return (kind == StepKind::euler ? "fixed_euler(" : "fixed_second_order(") +
           std::string(buf, r.ptr) + ")";
  }
  int n = 0;
  if (selector == SelectorKind::increment_control) n = 1;
  else if (kind == StepKind::euler) n = selector == SelectorKind::moment_match ? 2 : 3;
  else if (kind == StepKind::second_order) n = selector == SelectorKind::moment_match ? 4 : 5;
  else n = selector == SelectorKind::moment_match ? 6 : 7;
  return "S" + std::to_string(n);
}

namespace {

CoefficientLevel level_for(const SchemeId& s) {
  if (s.selector == SelectorKind::moment_match || s.selector == SelectorKind::weighted)
    return CoefficientLevel::full;
  return required_level(s.kind);
}

bool finite(ConstVec v) {
  for (double e : v)
    if (!std::isfinite(e)) return false;
  return true;
}

}  // namespace

PathRunner::PathRunner(SchemeId scheme, ModelPtr model, const ToleranceSet& tol,
                       std::vector<double> targets, const Observable* observable,
                       VariateFamily family)
    : scheme_(scheme),
      model_(std::move(model)),
      tol_(tol),
      targets_(std::move(targets)),
      observable_(observable),
      family_(family),
      level_(level_for(scheme_)),
      selector_(model_->dim(), model_->noise_dim(), tol_),
      coeffs_(model_->dim(), model_->noise_dim()),
      y_(model_->dim()),
      next_(model_->dim()),
      xi_(model_->noise_dim()),
      zeta_(model_->noise_dim()) {
  if (targets_.empty()) throw ConfigurationError("no target times");
  if (!(targets_[0] > 0.0)) throw ConfigurationError("target times must be positive");
  for (std::size_t k = 1; k < targets_.size(); ++k)
    if (!(targets_[k] > targets_[k - 1])) throw ConfigurationError("target times must increase");
  if (scheme_.needs_weights() && (!observable_ || !observable_->has_derivatives()))
    throw ConfigurationError("scheme " + scheme_.name() + " needs observable derivatives");
}

StepDecision PathRunner::first_decision(ConstVec y, double target) {
  switch (scheme_.selector) {
    case SelectorKind::fixed:
      return next_decision(y, 0.0, scheme_.fixed_dt, target);
    case SelectorKind::increment_control: {
      auto r = selector_.start(coeffs_, y);
      return clamp_step(r.delta, r.branch, std::nullopt, 0.0, target, tol_);
    }
    case SelectorKind::moment_match: {
      auto r = selector_.moment_match(coeffs_, y);
      const double ds = selector_.start(coeffs_, y).delta;
      return start_step(r.delta, r.branch, ds, 0.0, target, tol_);
    }
    case SelectorKind::weighted: {
      observable_->weights(y, weights_, scratch_);
      auto r = selector_.weighted(coeffs_, y, weights_);
      const double ds = selector_.start(coeffs_, y).delta;
      return start_step(r.delta, r.branch, ds, 0.0, target, tol_);
    }
  }
  return {};
}

StepDecision PathRunner::next_decision(ConstVec y, double tau, double prev, double target) {
  SelectorResult r;
  switch (scheme_.selector) {
    case SelectorKind::fixed: {
      double next = tau + scheme_.fixed_dt;
      // Round-off from repeated addition must not leave a sliver before the target.
      if (next >= target - 1e-10 * scheme_.fixed_dt) next = target;
      return {scheme_.fixed_dt, Branch::unconstrained_max, next};
    }
    case SelectorKind::increment_control:
      r = selector_.increment_control(coeffs_, y);
      break;
    case SelectorKind::moment_match:
      r = selector_.moment_match_or_fallback(coeffs_, y);
      break;
    case SelectorKind::weighted:
      observable_->weights(y, weights_, scratch_);
      r = selector_.weighted_or_fallback(coeffs_, y, weights_);
      break;
  }
  return clamp_step(r.delta, r.branch, prev, tau, target, tol_);
}

PathRunner::Summary PathRunner::run(ConstVec y0, NoiseStream stream, std::size_t last_target,
                                    const Visitor& visit, std::vector<TraceEntry>* trace) {
  if (last_target >= targets_.size()) throw ContractViolation("target index out of range");
  if (y0.size() != y_.size()) throw ContractViolation("initial state has wrong dimension");
  std::copy(y0.begin(), y0.end(), y_.begin());
  Summary out;
  double tau = 0.0, prev = 0.0;
  std::size_t k = 0;
  const std::size_t m = model_->noise_dim();
  while (true) {
    model_->evaluate(tau, y_, level_, coeffs_);
    if (!coeffs_.all_finite(level_)) {
      out.diverged = true;
      break;
    }
    const StepDecision dec =
        out.steps == 0 ? first_decision(y_, targets_[k]) : next_decision(y_, tau, prev, targets_[k]);
    const double dt = dec.next_time - tau;
    if (trace) trace->push_back({tau, dt, dec.branch});
    if (scheme_.kind == StepKind::second_order) {
      weak_variates(stream, family_, xi_, zeta_);
      second_order_step(coeffs_, y_, dt, xi_, zeta_, next_);
    } else {
      brownian_increments(stream, dt, MutVec(xi_.data(), m), family_);
      if (scheme_.kind == StepKind::euler) euler_step(coeffs_, y_, dt, xi_, next_);
      else euler_modified_step(coeffs_, y_, dt, xi_, next_);
    }
    std::swap(y_, next_);
    ++out.steps;
    prev = dt;
    tau = dec.next_time;
    if (!finite(y_)) {
      out.diverged = true;
      break;
    }
    if (tau == targets_[k]) {
      visit(k, y_, false);
      if (k == last_target) break;
      ++k;
    }
  }
  if (out.diverged)
    for (; k <= last_target; ++k) visit(k, y_, true);
  return out;
}

PathRecord run_path(const SchemeId& scheme, ModelPtr model, ConstVec y0,
                    const std::vector<double>& targets, const ToleranceSet& tol,
                    NoiseStream stream, const Observable* observable, VariateFamily family,
                    bool trace) {
  PathRunner runner(scheme, std::move(model), tol, targets, observable, family);
  PathRecord rec;
  auto visit = [&](std::size_t k, ConstVec y, bool diverged) {
    if (diverged) return;
    rec.states.emplace_back(y.begin(), y.end());
    rec.times.push_back(runner.targets()[k]);
  };
  auto s = runner.run(y0, stream, targets.size() - 1, visit, trace ? &rec.trace : nullptr);
  rec.steps = s.steps;
  rec.diverged = s.diverged;
  return rec;
}

PathRecord run_fixed(StepKind kind, double dt, ModelPtr model, ConstVec y0,
                     const std::vector<double>& targets, NoiseStream stream, VariateFamily family,
                     bool trace) {
  const auto tol = ToleranceSet::uniform(model->dim(), 1e-2);
  return run_path(SchemeId::fixed(kind, dt), std::move(model), y0, targets, tol, stream, nullptr,
                  family, trace);
}

}  // namespace wsde
