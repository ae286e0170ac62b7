#include "wsde/integrators.hpp"

#include <cmath>

#include "wsde/errors.hpp"

namespace wsde {

std::string to_string(StepKind k) {
  switch (k) {
    case StepKind::euler:
      return "euler";
    case StepKind::euler_modified:
      return "euler_modified";
    case StepKind::second_order:
      return "second_order";
  }
  return "?";
}

CoefficientLevel required_level(StepKind k) {
  return k == StepKind::euler ? CoefficientLevel::basic : CoefficientLevel::full;
}

void euler_step(const LocalCoefficients& c, ConstVec y, double dt, ConstVec dw, MutVec out) {
  for (std::size_t i = 0; i < c.d; ++i) {
    double v = y[i] + c.b[i] * dt;
    for (std::size_t k = 0; k < c.m; ++k) v += c.sigma_[k * c.d + i] * dw[k];
    out[i] = v;
  }
}

void euler_modified_step(const LocalCoefficients& c, ConstVec y, double dt, ConstVec dw,
                         MutVec out) {
  const double h = 0.5 * dt * dt;
  for (std::size_t i = 0; i < c.d; ++i) {
    double v = y[i] + c.b[i] * dt + c.l0b[i] * h;
    for (std::size_t k = 0; k < c.m; ++k) v += c.sigma_[k * c.d + i] * dw[k];
    out[i] = v;
  }
}

void second_order_step(const LocalCoefficients& c, ConstVec y, double dt, ConstVec xi,
                       ConstVec zeta, MutVec out) {
  const std::size_t d = c.d, m = c.m;
  const double sq = std::sqrt(dt), h32 = 0.5 * dt * sq, h2 = 0.5 * dt * dt;
  for (std::size_t i = 0; i < d; ++i) {
    double v = y[i] + c.b[i] * dt + c.l0b[i] * h2;
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t ki = k * d + i;
      v += (c.sigma_[ki] * sq + (c.lkb_[ki] + c.l0sigma_[ki]) * h32) * xi[k];
      for (std::size_t l = 0; l < m; ++l)
        v += c.lksigma_[(k * m + l) * d + i] * dt * levy_area_entry(xi, zeta, k, l);
    }
    out[i] = v;
  }
}

namespace {

LocalCoefficients at(const SdeModel& model, double t, ConstVec y, StepKind kind, double dt) {
  if (dt < 0.0) throw ContractViolation("negative step");
  if (y.size() != model.dim()) throw ContractViolation("state has wrong dimension");
  LocalCoefficients c(model.dim(), model.noise_dim());
  model.evaluate(t, y, required_level(kind), c);
  return c;
}

void check_noise(const SdeModel& model, ConstVec v) {
  if (v.size() != model.noise_dim()) throw ContractViolation("variate vector has wrong length");
}

void add_outer(Matrix& out, double f, ConstVec x, ConstVec y) {
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) out(i, j) += f * x[i] * y[j];
}

}  // namespace

Vector euler_step(const SdeModel& model, double t, ConstVec y, double dt, ConstVec dw) {
  check_noise(model, dw);
  auto c = at(model, t, y, StepKind::euler, dt);
  Vector out(y.size());
  euler_step(c, y, dt, dw, out);
  return out;
}

Vector euler_modified_step(const SdeModel& model, double t, ConstVec y, double dt, ConstVec dw) {
  check_noise(model, dw);
  auto c = at(model, t, y, StepKind::euler_modified, dt);
  Vector out(y.size());
  euler_modified_step(c, y, dt, dw, out);
  return out;
}

Vector second_order_step(const SdeModel& model, double t, ConstVec y, double dt, ConstVec xi,
                         ConstVec zeta) {
  check_noise(model, xi);
  check_noise(model, zeta);
  auto c = at(model, t, y, StepKind::second_order, dt);
  Vector out(y.size());
  second_order_step(c, y, dt, xi, zeta, out);
  return out;
}

// Each map is A + sum_k c_k xi_k + sum_{k,l} G_kl xi^{k,l} with a deterministic
// A. Using E xi = 0, E xi^2 = 1, E xi^4 = 3 and the independence of zeta:
//   mean   = A
//   second = A A^T + sum_k c_k c_k^T + 1/2 sum_{k,l} G_kl G_kl^T
// where the last term is absent for the Euler maps.
ConditionalMoments conditional_moments(StepKind kind, const SdeModel& model, double t, ConstVec y,
                                       double dt) {
  auto c = at(model, t, y, kind, dt);
  const std::size_t d = model.dim(), m = model.noise_dim();
  ConditionalMoments r{Vector(d), Matrix(d, d)};
  for (std::size_t i = 0; i < d; ++i) {
    r.mean[i] = c.b[i] * dt;
    if (kind != StepKind::euler) r.mean[i] += 0.5 * c.l0b[i] * dt * dt;
  }
  add_outer(r.second, 1.0, r.mean, r.mean);
  Vector ck(d);
  for (std::size_t k = 0; k < m; ++k) {
    auto s = c.sigma(k);
    if (kind == StepKind::second_order) {
      auto lb = c.lkb(k), l0s = c.l0sigma(k);
      for (std::size_t i = 0; i < d; ++i)
        ck[i] = s[i] * std::sqrt(dt) + 0.5 * (lb[i] + l0s[i]) * dt * std::sqrt(dt);
      add_outer(r.second, 1.0, ck, ck);
      for (std::size_t l = 0; l < m; ++l) add_outer(r.second, 0.5 * dt * dt, c.lksigma(k, l), c.lksigma(k, l));
    } else {
      add_outer(r.second, dt, s, s);
    }
  }
  return r;
}

}  // namespace wsde
