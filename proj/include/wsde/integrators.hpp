#pragma once

#include <string>

#include "wsde/noise.hpp"
#include "wsde/sde_model.hpp"

namespace wsde {

enum class StepKind { euler, euler_modified, second_order };

std::string to_string(StepKind k);

struct OneStepKind {
  StepKind kind = StepKind::euler;
  VariateFamily family = VariateFamily::gaussian;
  // Number of variates drawn per step: m for the Euler maps, 2m otherwise.
  std::size_t variates_per_step(std::size_t m) const {
    return kind == StepKind::second_order ? 2 * m : m;
  }
};

CoefficientLevel required_level(StepKind k);

// Step maps on precomputed coefficients. `out` may alias `y`.
void euler_step(const LocalCoefficients& c, ConstVec y, double dt, ConstVec dw, MutVec out);
void euler_modified_step(const LocalCoefficients& c, ConstVec y, double dt, ConstVec dw,
                         MutVec out);
void second_order_step(const LocalCoefficients& c, ConstVec y, double dt, ConstVec xi,
                       ConstVec zeta, MutVec out);

// Y + b dt + sum_k sigma_k dW^k
Vector euler_step(const SdeModel& model, double t, ConstVec y, double dt, ConstVec dw);
// euler_step + L0 b dt^2 / 2
Vector euler_modified_step(const SdeModel& model, double t, ConstVec y, double dt, ConstVec dw);
// Y + b dt + L0 b dt^2/2 + sum_k (sigma_k sqrt(dt) + (L_k b + L0 sigma_k) dt^1.5/2) xi_k
//   + sum_{k,l} L_k sigma_l dt xi^{k,l}
Vector second_order_step(const SdeModel& model, double t, ConstVec y, double dt, ConstVec xi,
                         ConstVec zeta);

/// Exact first and second conditional moments of the increment Y_next - Y.
struct ConditionalMoments {
  Vector mean;
  Matrix second;
};

ConditionalMoments conditional_moments(StepKind kind, const SdeModel& model, double t, ConstVec y,
                                       double dt);

}  // namespace wsde
