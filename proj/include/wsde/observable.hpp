#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wsde/sde_model.hpp"
#include "wsde/step_control.hpp"

namespace wsde {

/// A scalar function of the state with optional first and second derivatives.
struct ScalarObservable {
  std::string name;
  std::function<double(ConstVec)> value;
  std::function<void(ConstVec, MutVec)> gradient;
  std::function<void(ConstVec, Matrix&)> hessian;
};

/// One or more scalar observables estimated together.
class Observable {
 public:
  Observable() = default;
  explicit Observable(std::vector<ScalarObservable> parts);

  std::size_t count() const { return parts_.size(); }
  const ScalarObservable& part(std::size_t j) const { return parts_[j]; }
  bool has_derivatives() const;

  void values(ConstVec y, MutVec out) const;

  /// Element-wise max over the parts of |grad| and |hess| at y. `scratch`
  /// holds per-part derivatives and is resized as needed.
  void weights(ConstVec y, ObservableWeights& w, ObservableWeights& scratch) const;

 private:
  std::vector<ScalarObservable> parts_;
};

/// log(1 + x^2) of the first coordinate.
ScalarObservable log1p_square();
/// x^3 of the first coordinate.
ScalarObservable cube();
/// (3x1/7 + x2/7)^2 + asinh(x1/7 - 2x2/7).
ScalarObservable coupled_invariant();
/// x_i.
ScalarObservable coordinate(std::size_t i, std::size_t d, std::string name);

}  // namespace wsde
