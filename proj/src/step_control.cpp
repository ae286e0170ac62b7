#include "wsde/step_control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wsde/errors.hpp"

namespace wsde {

double vec_norm(VectorNorm kind, ConstVec v) {
  double r = 0.0;
  switch (kind) {
    case VectorNorm::l1:
      for (double e : v) r += std::abs(e);
      return r;
    case VectorNorm::l2:
      for (double e : v) r += e * e;
      return std::sqrt(r);
    case VectorNorm::linf:
      for (double e : v) r = std::max(r, std::abs(e));
      return r;
  }
  return r;
}

double mat_norm(MatrixNorm kind, const Matrix& a) {
  double r = 0.0;
  switch (kind) {
    case MatrixNorm::max_abs:
      for (double e : a.data) r = std::max(r, std::abs(e));
      return r;
    case MatrixNorm::sum_abs:
      for (double e : a.data) r += std::abs(e);
      return r;
    case MatrixNorm::frobenius:
      for (double e : a.data) r += e * e;
      return std::sqrt(r);
  }
  return r;
}

bool norms_compatible(VectorNorm v, MatrixNorm m) {
  switch (m) {
    case MatrixNorm::max_abs:
      return true;
    case MatrixNorm::frobenius:
      return v != VectorNorm::linf;
    case MatrixNorm::sum_abs:
      return v == VectorNorm::l1;
  }
  return false;
}

VectorNorm parse_vector_norm(const std::string& s) {
  if (s == "l1") return VectorNorm::l1;
  if (s == "l2") return VectorNorm::l2;
  if (s == "linf") return VectorNorm::linf;
  throw ConfigurationError("unknown vector norm '" + s + "'");
}

MatrixNorm parse_matrix_norm(const std::string& s) {
  if (s == "max_abs") return MatrixNorm::max_abs;
  if (s == "sum_abs") return MatrixNorm::sum_abs;
  if (s == "frobenius") return MatrixNorm::frobenius;
  throw ConfigurationError("unknown matrix norm '" + s + "'");
}

std::string to_string(VectorNorm v) {
  switch (v) {
    case VectorNorm::l1:
      return "l1";
    case VectorNorm::l2:
      return "l2";
    case VectorNorm::linf:
      return "linf";
  }
  return "?";
}

std::string to_string(MatrixNorm m) {
  switch (m) {
    case MatrixNorm::max_abs:
      return "max_abs";
    case MatrixNorm::sum_abs:
      return "sum_abs";
    case MatrixNorm::frobenius:
      return "frobenius";
  }
  return "?";
}

std::string to_string(Branch b) {
  switch (b) {
    case Branch::increment_control:
      return "increment_control";
    case Branch::moment_match:
      return "moment_match";
    case Branch::weighted:
      return "weighted";
    case Branch::ltol_fallback:
      return "ltol_fallback";
    case Branch::unconstrained_max:
      return "unconstrained_max";
  }
  return "?";
}

ToleranceSet ToleranceSet::uniform(std::size_t d, double tol) {
  ToleranceSet t;
  t.atol.assign(d, tol);
  t.rtol.assign(d, tol);
  t.atol_start.assign(d, tol / 10.0);
  t.rtol_start.assign(d, tol / 10.0);
  t.atol_fallback.assign(d, 1e-5);
  t.rtol_fallback.assign(d, 1e-5);
  return t;
}

void ToleranceSet::validate(std::size_t d) const {
  for (const Vector* v : {&atol, &rtol, &atol_start, &rtol_start, &atol_fallback, &rtol_fallback}) {
    if (v->size() != d) throw ConfigurationError("tolerance vector has wrong length");
    for (double e : *v)
      if (!(e >= 0.0 && e <= 1.0)) throw ConfigurationError("tolerances must lie in [0, 1]");
  }
  if (!(delta_min > 0.0 && delta_min <= delta_max))
    throw ConfigurationError("need 0 < delta_min <= delta_max");
  if (!(fac_max > 1.0)) throw ConfigurationError("fac_max must exceed 1");
  if (!(u_fac >= 0.0)) throw ConfigurationError("u_fac must be non-negative");
  if (!(ltol > 0.0)) throw ConfigurationError("ltol must be positive");
  if (!norms_compatible(vec_norm, mat_norm))
    throw ConfigurationError("matrix norm " + to_string(mat_norm) + " is not compatible with " +
                             to_string(vec_norm));
}

Vector threshold_d(ConstVec atol, ConstVec rtol, ConstVec y) {
  Vector d(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    d[i] = atol[i] + rtol[i] * std::abs(y[i]);
    if (!(d[i] > 0.0)) throw DegenerateToleranceError(i, y[i]);
  }
  return d;
}

Vector threshold_dtilde(ConstVec atol, ConstVec rtol, ConstVec y) {
  Vector d(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    d[i] = std::sqrt(atol[i]) + std::sqrt(rtol[i]) * std::abs(y[i]);
    if (!(d[i] > 0.0)) throw DegenerateToleranceError(i, y[i]);
  }
  return d;
}

StepSelector::StepSelector(std::size_t d, std::size_t m, const ToleranceSet& tol)
    : tol_(tol), d_(d), m_(m), dd_(d), dt_(d), tmp_(d), t2_(d, d) {
  tol_.validate(d);
  const Vector* src[6] = {&tol_.atol,       &tol_.rtol,          &tol_.atol_start,
                          &tol_.rtol_start, &tol_.atol_fallback, &tol_.rtol_fallback};
  for (int i = 0; i < 6; ++i) {
    sqrt_tol_[i] = *src[i];
    for (double& v : sqrt_tol_[i]) v = std::sqrt(v);
  }
}

void StepSelector::thresholds(ConstVec atol, ConstVec rtol, ConstVec y) {
  const double* sa = nullptr;
  const double* sr = nullptr;
  if (atol.data() == tol_.atol.data() && rtol.data() == tol_.rtol.data()) {
    sa = sqrt_tol_[0].data();
    sr = sqrt_tol_[1].data();
  } else if (atol.data() == tol_.atol_start.data() && rtol.data() == tol_.rtol_start.data()) {
    sa = sqrt_tol_[2].data();
    sr = sqrt_tol_[3].data();
  } else if (atol.data() == tol_.atol_fallback.data() &&
             rtol.data() == tol_.rtol_fallback.data()) {
    sa = sqrt_tol_[4].data();
    sr = sqrt_tol_[5].data();
  }
  for (std::size_t i = 0; i < d_; ++i) {
    const double ay = std::abs(y[i]);
    dd_[i] = atol[i] + rtol[i] * ay;
    dt_[i] = sa ? sa[i] + sr[i] * ay : std::sqrt(atol[i]) + std::sqrt(rtol[i]) * ay;
    if (!(dd_[i] > 0.0)) throw DegenerateToleranceError(i, y[i]);
  }
}

SelectorResult StepSelector::from_denominator(double den, Branch branch) const {
  if (den > 0.0) return {std::sqrt(2.0 / den), den, branch};
  return {tol_.delta_max, den, Branch::unconstrained_max};
}

SelectorResult StepSelector::increment_control(const LocalCoefficients& c, ConstVec y,
                                               ConstVec atol, ConstVec rtol) {
  double drift = 0.0, diff = 0.0;
  if (tol_.vec_norm == VectorNorm::linf && d_ == 1 && atol.data() == tol_.atol.data() &&
      rtol.data() == tol_.rtol.data()) {
    const double ay = std::abs(y[0]);
    const double dd = atol[0] + rtol[0] * ay;
    if (!(dd > 0.0)) throw DegenerateToleranceError(0, y[0]);
    const double dt = sqrt_tol_[0][0] + sqrt_tol_[1][0] * ay;
    drift = std::abs(c.b[0]) / dd;
    double ss = 0.0;
    for (std::size_t k = 0; k < m_; ++k) ss += c.sigma_[k] * c.sigma_[k];
    diff = ss / (dt * dt);
  } else {
    thresholds(atol, rtol, y);
    for (std::size_t i = 0; i < d_; ++i) tmp_[i] = c.b[i] / dd_[i];
    drift = vec_norm(tol_.vec_norm, tmp_);
    for (std::size_t k = 0; k < m_; ++k) {
      auto s = c.sigma(k);
      for (std::size_t i = 0; i < d_; ++i) tmp_[i] = s[i] / dt_[i];
      const double n = vec_norm(tol_.vec_norm, tmp_);
      diff += n * n;
    }
  }
  const double mx = std::max(drift, diff);
  if (mx > 0.0) return {1.0 / mx, mx, Branch::increment_control};
  return {tol_.delta_max, mx, Branch::unconstrained_max};
}

SelectorResult StepSelector::moment_match(const LocalCoefficients& c, ConstVec y) {
  thresholds(tol_.atol, tol_.rtol, y);
  for (std::size_t i = 0; i < d_; ++i) tmp_[i] = c.l0b[i] / dd_[i];
  const double drift = vec_norm(tol_.vec_norm, tmp_);
  double tt = 0.0;
  for (std::size_t k = 0; k < m_; ++k) {
    auto s = c.sigma(k), l0s = c.l0sigma(k), lb = c.lkb(k);
    for (std::size_t i = 0; i < d_; ++i) tmp_[i] = s[i] / dt_[i];
    const double ns = vec_norm(tol_.vec_norm, tmp_);
    for (std::size_t i = 0; i < d_; ++i) tmp_[i] = (l0s[i] + lb[i]) / dt_[i];
    tt += ns * vec_norm(tol_.vec_norm, tmp_);
    for (std::size_t l = 0; l < m_; ++l) {
      auto g = c.lksigma(k, l);
      for (std::size_t i = 0; i < d_; ++i) tmp_[i] = g[i] / dt_[i];
      const double ng = vec_norm(tol_.vec_norm, tmp_);
      tt += 0.5 * ng * ng;
    }
  }
  const double pair[2] = {drift, tt};
  return from_denominator(vec_norm(tol_.pair_norm, pair), Branch::moment_match);
}

void StepSelector::t2(const LocalCoefficients& c, Matrix& out) {
  const std::size_t d = c.d, m = c.m;
  std::fill(out.data.begin(), out.data.end(), 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    auto s = c.sigma(k), l0s = c.l0sigma(k), lb = c.lkb(k);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        out(i, j) += 0.5 * (s[i] * (l0s[j] + lb[j]) + (l0s[i] + lb[i]) * s[j]);
    for (std::size_t l = 0; l < m; ++l) {
      auto g = c.lksigma(k, l);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) out(i, j) += 0.5 * g[i] * g[j];
    }
  }
}

SelectorResult StepSelector::weighted(const LocalCoefficients& c, ConstVec y,
                                      const ObservableWeights& w) {
  thresholds(tol_.atol, tol_.rtol, y);
  const double u = tol_.u_fac;
  for (std::size_t i = 0; i < d_; ++i) {
    const double wi = std::max(w.grad.empty() ? 0.0 : w.grad[i], u);
    tmp_[i] = wi * c.l0b[i] / dd_[i];
  }
  const double drift = vec_norm(tol_.vec_norm, tmp_);
  t2(c, t2_);
  for (std::size_t i = 0; i < d_; ++i)
    for (std::size_t j = 0; j < d_; ++j) {
      const double wij = std::max(w.hess.data.empty() ? 0.0 : w.hess(i, j), u);
      t2_(i, j) *= wij / (dt_[i] * dt_[j]);
    }
  const double pair[2] = {drift, mat_norm(tol_.mat_norm, t2_)};
  return from_denominator(vec_norm(tol_.pair_norm, pair), Branch::weighted);
}

SelectorResult StepSelector::moment_match_or_fallback(const LocalCoefficients& c, ConstVec y) {
  auto r = moment_match(c, y);
  if (r.denominator > tol_.ltol) return r;
  auto f = increment_control(c, y, tol_.atol_fallback, tol_.rtol_fallback);
  f.branch = Branch::ltol_fallback;
  return f;
}

SelectorResult StepSelector::weighted_or_fallback(const LocalCoefficients& c, ConstVec y,
                                                  const ObservableWeights& w) {
  auto r = weighted(c, y, w);
  if (r.denominator > tol_.ltol) return r;
  auto f = increment_control(c, y, tol_.atol_fallback, tol_.rtol_fallback);
  f.branch = Branch::ltol_fallback;
  return f;
}

SelectorResult StepSelector::start(const LocalCoefficients& c, ConstVec y) {
  return increment_control(c, y, tol_.atol_start, tol_.rtol_start);
}

// ---------------------------------------------------------------------------
// Model-level wrappers

namespace {

LocalCoefficients coefficients(const SdeModel& model, double t, ConstVec y, CoefficientLevel lv) {
  if (y.size() != model.dim()) throw ContractViolation("state has wrong dimension");
  LocalCoefficients c(model.dim(), model.noise_dim());
  model.evaluate_checked(t, y, lv, c);
  return c;
}

void add_outer(Matrix& out, double f, ConstVec x, ConstVec y) {
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) out(i, j) += f * x[i] * y[j];
}

ObservableWeights weights_from(ConstVec grad, const Matrix* hess, std::size_t d) {
  ObservableWeights w;
  w.grad.assign(d, 0.0);
  w.hess = Matrix(d, d);
  for (std::size_t i = 0; i < grad.size() && i < d; ++i) w.grad[i] = std::abs(grad[i]);
  if (hess)
    for (std::size_t i = 0; i < hess->data.size() && i < d * d; ++i)
      w.hess.data[i] = std::abs(hess->data[i]);
  return w;
}

}  // namespace

Matrix t2_tensor(const SdeModel& model, double t, ConstVec y) {
  auto c = coefficients(model, t, y, CoefficientLevel::full);
  Matrix out(model.dim(), model.dim());
  StepSelector::t2(c, out);
  return out;
}

Matrix t3_tensor(const SdeModel& model, double t, ConstVec y) {
  auto c = coefficients(model, t, y, CoefficientLevel::full);
  Matrix out(model.dim(), model.dim());
  add_outer(out, 0.5, c.b, c.l0b);
  add_outer(out, 0.5, c.l0b, c.b);
  for (std::size_t k = 0; k < model.noise_dim(); ++k) {
    add_outer(out, 1.0 / 3.0, c.lkb(k), c.lkb(k));
    add_outer(out, 1.0 / 6.0, c.lkb(k), c.l0sigma(k));
    add_outer(out, 1.0 / 6.0, c.l0sigma(k), c.lkb(k));
    add_outer(out, 1.0 / 3.0, c.l0sigma(k), c.l0sigma(k));
  }
  return out;
}

Matrix t4_tensor(const SdeModel& model, double t, ConstVec y) {
  auto c = coefficients(model, t, y, CoefficientLevel::full);
  Matrix out(model.dim(), model.dim());
  add_outer(out, 0.25, c.l0b, c.l0b);
  return out;
}

double delta_increment_control(const SdeModel& model, double t, ConstVec y,
                               const ToleranceSet& tol) {
  auto c = coefficients(model, t, y, CoefficientLevel::basic);
  StepSelector sel(model.dim(), model.noise_dim(), tol);
  return sel.increment_control(c, y, tol.atol, tol.rtol).delta;
}

double delta_moment_match(const SdeModel& model, double t, ConstVec y, const ToleranceSet& tol) {
  auto c = coefficients(model, t, y, CoefficientLevel::full);
  StepSelector sel(model.dim(), model.noise_dim(), tol);
  return sel.moment_match(c, y).delta;
}

double delta_weighted(const SdeModel& model, double t, ConstVec y, const ToleranceSet& tol,
                      ConstVec grad_phi, const Matrix& hess_phi) {
  auto c = coefficients(model, t, y, CoefficientLevel::full);
  StepSelector sel(model.dim(), model.noise_dim(), tol);
  return sel.weighted(c, y, weights_from(grad_phi, &hess_phi, model.dim())).delta;
}

double delta_start(const SdeModel& model, double t0, ConstVec y0, const ToleranceSet& tol) {
  auto c = coefficients(model, t0, y0, CoefficientLevel::basic);
  StepSelector sel(model.dim(), model.noise_dim(), tol);
  return sel.start(c, y0).delta;
}

namespace {

StepDecision capped(double delta_star, Branch branch, double step, double tau, double target) {
  double next = tau + step;
  if (next >= target) next = target;
  if (next <= tau) next = std::min(std::nextafter(tau, target), target);
  return {delta_star, branch, next};
}

}  // namespace

StepDecision clamp_step(double delta_star, Branch branch, std::optional<double> prev_step,
                        double tau, double target, const ToleranceSet& tol) {
  if (!(tau < target)) throw std::logic_error("current time is not before the target time");
  double step = std::min(tol.delta_max, delta_star);
  if (prev_step) step = std::min(step, tol.fac_max * *prev_step);
  step = std::max(tol.delta_min, step);
  return capped(delta_star, branch, step, tau, target);
}

StepDecision start_step(double delta_star0, Branch branch, double delta_s, double tau0,
                        double target, const ToleranceSet& tol) {
  if (!(tau0 < target)) throw std::logic_error("current time is not before the target time");
  const double step = std::max(tol.delta_min, std::min({tol.delta_max, delta_star0, delta_s}));
  return capped(delta_star0, branch, step, tau0, target);
}

double discrepancy_eval(DiscrepancyKind kind, const SdeModel& model, double t, ConstVec y,
                        const ToleranceSet& tol, double delta, ConstVec grad_phi,
                        const Matrix* hess_phi) {
  if (!(delta > 0.0)) throw ContractViolation("discrepancy needs a positive step");
  const auto lv =
      kind == DiscrepancyKind::ancillary_increment ? CoefficientLevel::basic : CoefficientLevel::full;
  auto c = coefficients(model, t, y, lv);
  StepSelector sel(model.dim(), model.noise_dim(), tol);
  switch (kind) {
    case DiscrepancyKind::ancillary_increment:
      return delta * sel.increment_control(c, y, tol.atol, tol.rtol).denominator;
    case DiscrepancyKind::ancillary_moment:
      return 0.5 * delta * delta * sel.moment_match(c, y).denominator;
    case DiscrepancyKind::weighted:
      return 0.5 * delta * delta *
             sel.weighted(c, y, weights_from(grad_phi, hess_phi, model.dim())).denominator;
  }
  return 0.0;
}

}  // namespace wsde
