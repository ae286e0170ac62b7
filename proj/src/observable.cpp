#include "wsde/observable.hpp"

#include <algorithm>
#include <cmath>

#include "wsde/errors.hpp"

namespace wsde {

Observable::Observable(std::vector<ScalarObservable> parts) : parts_(std::move(parts)) {
  if (parts_.empty()) throw ConfigurationError("observable needs at least one part");
  for (const auto& p : parts_)
    if (!p.value) throw ConfigurationError("observable part '" + p.name + "' has no value");
}

bool Observable::has_derivatives() const {
  return !parts_.empty() && std::all_of(parts_.begin(), parts_.end(), [](const auto& p) {
    return p.gradient && p.hessian;
  });
}

void Observable::values(ConstVec y, MutVec out) const {
  for (std::size_t j = 0; j < parts_.size(); ++j) out[j] = parts_[j].value(y);
}

void Observable::weights(ConstVec y, ObservableWeights& w, ObservableWeights& scratch) const {
  const std::size_t d = y.size();
  w.grad.assign(d, 0.0);
  if (w.hess.rows != d) w.hess = Matrix(d, d);
  std::fill(w.hess.data.begin(), w.hess.data.end(), 0.0);
  Vector& g = scratch.grad;
  Matrix& h = scratch.hess;
  g.resize(d);
  if (h.rows != d) h = Matrix(d, d);
  for (const auto& p : parts_) {
    p.gradient(y, g);
    p.hessian(y, h);
    for (std::size_t i = 0; i < d; ++i) w.grad[i] = std::max(w.grad[i], std::abs(g[i]));
    for (std::size_t i = 0; i < d * d; ++i) w.hess.data[i] = std::max(w.hess.data[i], std::abs(h.data[i]));
  }
}

ScalarObservable log1p_square() {
  return {"log(1+x^2)", [](ConstVec y) { return std::log1p(y[0] * y[0]); },
          [](ConstVec y, MutVec g) { g[0] = 2.0 * y[0] / (1.0 + y[0] * y[0]); },
          [](ConstVec y, Matrix& h) {
            const double q = 1.0 + y[0] * y[0];
            h(0, 0) = 2.0 * (1.0 - y[0] * y[0]) / (q * q);
          }};
}

ScalarObservable cube() {
  return {"x^3", [](ConstVec y) { return y[0] * y[0] * y[0]; },
          [](ConstVec y, MutVec g) { g[0] = 3.0 * y[0] * y[0]; },
          [](ConstVec y, Matrix& h) { h(0, 0) = 6.0 * y[0]; }};
}

ScalarObservable coupled_invariant() {
  // u = 3x1/7 + x2/7, v = x1/7 - 2x2/7
  return {"u^2+asinh(v)",
          [](ConstVec y) {
            const double u = (3.0 * y[0] + y[1]) / 7.0, v = (y[0] - 2.0 * y[1]) / 7.0;
            return u * u + std::asinh(v);
          },
          [](ConstVec y, MutVec g) {
            const double u = (3.0 * y[0] + y[1]) / 7.0, v = (y[0] - 2.0 * y[1]) / 7.0;
            const double r = 1.0 / std::sqrt(1.0 + v * v);
            g[0] = 2.0 * u * 3.0 / 7.0 + r / 7.0;
            g[1] = 2.0 * u / 7.0 - 2.0 * r / 7.0;
          },
          [](ConstVec y, Matrix& h) {
            const double v = (y[0] - 2.0 * y[1]) / 7.0;
            const double a = -v / std::pow(1.0 + v * v, 1.5);  // d2 asinh / dv2
            const double du[2] = {3.0 / 7.0, 1.0 / 7.0}, dv[2] = {1.0 / 7.0, -2.0 / 7.0};
            for (int i = 0; i < 2; ++i)
              for (int j = 0; j < 2; ++j) h(i, j) = 2.0 * du[i] * du[j] + a * dv[i] * dv[j];
          }};
}

ScalarObservable coordinate(std::size_t i, std::size_t d, std::string name) {
  return {std::move(name), [i](ConstVec y) { return y[i]; },
          [i, d](ConstVec, MutVec g) {
            for (std::size_t j = 0; j < d; ++j) g[j] = j == i ? 1.0 : 0.0;
          },
          [](ConstVec, Matrix& h) { std::fill(h.data.begin(), h.data.end(), 0.0); }};
}

}  // namespace wsde
