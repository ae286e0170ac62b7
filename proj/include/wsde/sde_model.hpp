#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace wsde {

using Vector = std::vector<double>;
using ConstVec = std::span<const double>;
using MutVec = std::span<double>;

// Dense row-major matrix.
struct Matrix {
  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
};

enum class CoefficientLevel {
  basic,  // b and sigma_k only
  full,   // plus L0 b, L_k b, L0 sigma_k, L_k sigma_l
};

/// Coefficients of one SDE at a single point (t, x).
///
/// Drivers are indexed from 0. lksigma(k, l) holds L_k sigma_l.
struct LocalCoefficients {
  LocalCoefficients() = default;
  LocalCoefficients(std::size_t d, std::size_t m);

  MutVec sigma(std::size_t k) { return {&sigma_[k * d], d}; }
  ConstVec sigma(std::size_t k) const { return {&sigma_[k * d], d}; }
  MutVec lkb(std::size_t k) { return {&lkb_[k * d], d}; }
  ConstVec lkb(std::size_t k) const { return {&lkb_[k * d], d}; }
  MutVec l0sigma(std::size_t k) { return {&l0sigma_[k * d], d}; }
  ConstVec l0sigma(std::size_t k) const { return {&l0sigma_[k * d], d}; }
  MutVec lksigma(std::size_t k, std::size_t l) { return {&lksigma_[(k * m + l) * d], d}; }
  ConstVec lksigma(std::size_t k, std::size_t l) const { return {&lksigma_[(k * m + l) * d], d}; }

  void clear();
  bool all_finite(CoefficientLevel level) const;

  std::size_t d = 0;
  std::size_t m = 0;
  Vector b;
  Vector l0b;
  Vector sigma_;
  Vector lkb_;
  Vector l0sigma_;
  Vector lksigma_;
};

/// An Ito SDE dX = b(t,X) dt + sum_k sigma_k(t,X) dW^k together with the
/// Lie-operator images L0 = d/dt + b.grad + 1/2 a:hess and L_k = sigma_k.grad
/// applied to the coefficients.
///
/// Implementations must be safe to call concurrently.
class SdeModel {
 public:
  SdeModel(std::size_t d, std::size_t m, bool autonomous);
  virtual ~SdeModel() = default;

  std::size_t dim() const { return d_; }
  std::size_t noise_dim() const { return m_; }
  bool autonomous() const { return autonomous_; }

  // Fills `out` (already sized d, m). Does not check finiteness.
  virtual void evaluate(double t, ConstVec x, CoefficientLevel level,
                        LocalCoefficients& out) const = 0;

  // Like evaluate, but throws ModelEvaluationError on non-finite output.
  void evaluate_checked(double t, ConstVec x, CoefficientLevel level,
                        LocalCoefficients& out) const;

  Vector drift(double t, ConstVec x) const;
  Vector diffusion(double t, ConstVec x, std::size_t k) const;
  Vector l0_drift(double t, ConstVec x) const;
  Vector lk_drift(double t, ConstVec x, std::size_t k) const;
  Vector l0_diffusion(double t, ConstVec x, std::size_t k) const;
  Vector lk_diffusion(double t, ConstVec x, std::size_t k, std::size_t l) const;

 private:
  LocalCoefficients at(double t, ConstVec x, CoefficientLevel level) const;

  std::size_t d_;
  std::size_t m_;
  bool autonomous_;
};

using ModelPtr = std::shared_ptr<const SdeModel>;

/// Drift and diffusion only; the operator images are left to a decorator.
struct DriftDiffusion {
  std::size_t d = 1;
  std::size_t m = 1;
  bool autonomous = false;
  std::function<void(double t, ConstVec x, MutVec out)> drift;
  std::function<void(double t, ConstVec x, std::size_t k, MutVec out)> diffusion;
};

/// Default relative step for central differences: cbrt(machine epsilon).
double default_fd_step();

/// Builds a model whose operator images are central-difference approximations.
/// The step along coordinate i is rel_step * (1 + |x_i|) for first derivatives
/// and ten times that for second derivatives.
ModelPtr finite_difference_operators(DriftDiffusion f, double rel_step = default_fd_step());

/// Same, reusing only the basic-level coefficients of an existing model.
ModelPtr finite_difference_operators(ModelPtr model, double rel_step = default_fd_step());

using ParameterMap = std::map<std::string, double>;

/// Builtin test problems with closed-form operator images.
///
///   gbm            sigma, x0
///   linear         a, sigma, x0          dX = aX dt + sigma X dW
///   landau         a, sigma, x0
///   additive       sigma, x0
///   coupled        alpha, beta, x0_1, x0_2
///   duffing_vdp    alpha, beta, gamma, delta, sigma1, sigma2, sigma3, q0, p0
///
/// Missing parameters take the defaults of builtin_defaults(name).
ModelPtr builtin_problem(const std::string& name, const ParameterMap& params = {});
ParameterMap builtin_defaults(const std::string& name);
Vector builtin_initial_state(const std::string& name, const ParameterMap& params = {});
std::vector<std::string> builtin_names();

}  // namespace wsde
