#include "wsde/errors.hpp"

#include <sstream>

namespace wsde {

namespace {

std::string describe_threshold(std::size_t component, double y) {
  std::ostringstream os;
  os << "tolerance threshold is zero in component " << component << " at Y = " << y;
  return os.str();
}

std::string describe_evaluation(double t, std::span<const double> x, const std::string& which) {
  std::ostringstream os;
  os.precision(17);
  os << "non-finite " << which << " at t = " << t << ", x = (";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

DegenerateToleranceError::DegenerateToleranceError(std::size_t c, double value)
    : std::domain_error(describe_threshold(c, value)), component(c), y(value) {}

ModelEvaluationError::ModelEvaluationError(double time, std::span<const double> state,
                                           std::string w)
    : std::runtime_error(describe_evaluation(time, state, w)),
      t(time),
      x(state.begin(), state.end()),
      which(std::move(w)) {}

}  // namespace wsde
