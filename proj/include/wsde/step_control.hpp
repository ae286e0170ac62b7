#pragma once

#include <optional>
#include <string>

#include "wsde/sde_model.hpp"

namespace wsde {

enum class VectorNorm { l1, l2, linf };
// Absolute matrix norms. max_abs satisfies |x y^T| <= |x||y| for every vector
// norm above, frobenius for l1 and l2, sum_abs for l1 only.
enum class MatrixNorm { max_abs, sum_abs, frobenius };

double vec_norm(VectorNorm kind, ConstVec v);
double mat_norm(MatrixNorm kind, const Matrix& a);
bool norms_compatible(VectorNorm v, MatrixNorm m);

VectorNorm parse_vector_norm(const std::string& s);
MatrixNorm parse_matrix_norm(const std::string& s);
std::string to_string(VectorNorm v);
std::string to_string(MatrixNorm m);

/// Step-size controller settings.
struct ToleranceSet {
  Vector atol, rtol;
  Vector atol_start, rtol_start;        // starting step
  Vector atol_fallback, rtol_fallback;  // increment control after an Ltol trigger
  double ltol = 100.0 * 0x1p-52;
  double u_fac = 0.0;
  double delta_min = 2.0 * 0x1p-52;
  double delta_max = 0.5;
  double fac_max = 20.0;
  VectorNorm vec_norm = VectorNorm::linf;
  MatrixNorm mat_norm = MatrixNorm::max_abs;
  VectorNorm pair_norm = VectorNorm::linf;

  /// atol = rtol = tol, start tolerances tol / 10, fallback tolerances 1e-5.
  static ToleranceSet uniform(std::size_t d, double tol);

  /// Throws ConfigurationError when a field is out of range.
  void validate(std::size_t d) const;
};

enum class Branch { increment_control, moment_match, weighted, ltol_fallback, unconstrained_max };
std::string to_string(Branch b);

struct SelectorResult {
  double delta = 0.0;
  // The quantity compared against Ltol (or the increment-control maximum).
  double denominator = 0.0;
  Branch branch = Branch::unconstrained_max;
};

struct StepDecision {
  double delta_star = 0.0;
  Branch branch = Branch::unconstrained_max;
  double next_time = 0.0;
};

/// Per-observable derivative magnitudes: max over observables of |grad phi|
/// and |hess phi|. The u_fac floor is applied by the selector.
struct ObservableWeights {
  Vector grad;
  Matrix hess;
};

// Thresholds d_i = atol_i + rtol_i |Y_i| and dtilde_i = sqrt(atol_i) + sqrt(rtol_i) |Y_i|.
Vector threshold_d(ConstVec atol, ConstVec rtol, ConstVec y);
Vector threshold_dtilde(ConstVec atol, ConstVec rtol, ConstVec y);

/// Reusable workspace for the three closed-form selectors. Works on
/// precomputed LocalCoefficients so the runner evaluates the model once per step.
class StepSelector {
 public:
  StepSelector(std::size_t d, std::size_t m, const ToleranceSet& tol);

  const ToleranceSet& tolerances() const { return tol_; }

  // 1 / max{|b/d|, sum_k |sigma_k/dtilde|^2}, or delta_max.
  SelectorResult increment_control(const LocalCoefficients& c, ConstVec y, ConstVec atol,
                                   ConstVec rtol);
  // Same with the main tolerances.
  SelectorResult increment_control(const LocalCoefficients& c, ConstVec y) {
    return increment_control(c, y, tol_.atol, tol_.rtol);
  }
  // sqrt(2 / |(|L0 b/d|, t)|) with t the bound on |T2/(dtilde dtilde^T)|.
  SelectorResult moment_match(const LocalCoefficients& c, ConstVec y);
  // sqrt(2 / |(|w L0 b/d|, |W T2/(dtilde dtilde^T)|)|).
  SelectorResult weighted(const LocalCoefficients& c, ConstVec y, const ObservableWeights& w);

  // Selector followed by the Ltol test; falls back to increment control
  // with the fallback tolerances.
  SelectorResult moment_match_or_fallback(const LocalCoefficients& c, ConstVec y);
  SelectorResult weighted_or_fallback(const LocalCoefficients& c, ConstVec y,
                                      const ObservableWeights& w);

  // Increment control with the start tolerances.
  SelectorResult start(const LocalCoefficients& c, ConstVec y);

  // T2 into `out` (d x d).
  static void t2(const LocalCoefficients& c, Matrix& out);

 private:
  void thresholds(ConstVec atol, ConstVec rtol, ConstVec y);
  SelectorResult from_denominator(double den, Branch branch) const;

  ToleranceSet tol_;
  std::size_t d_, m_;
  Vector dd_, dt_, tmp_;
  // Square roots of the main, start and fallback tolerances.
  Vector sqrt_tol_[6];
  Matrix t2_;
};

Matrix t2_tensor(const SdeModel& model, double t, ConstVec y);
Matrix t3_tensor(const SdeModel& model, double t, ConstVec y);
Matrix t4_tensor(const SdeModel& model, double t, ConstVec y);

double delta_increment_control(const SdeModel& model, double t, ConstVec y,
                               const ToleranceSet& tol);
double delta_moment_match(const SdeModel& model, double t, ConstVec y, const ToleranceSet& tol);
double delta_weighted(const SdeModel& model, double t, ConstVec y, const ToleranceSet& tol,
                      ConstVec grad_phi, const Matrix& hess_phi);
double delta_start(const SdeModel& model, double t0, ConstVec y0, const ToleranceSet& tol);

/// tau_{n+1} = min{T_k, tau_n + max{delta_min, min{delta_max, delta_star, fac_max * prev}}}.
/// prev_step is ignored when absent (first step). `target` is the nearest unhit target time.
StepDecision clamp_step(double delta_star, Branch branch, std::optional<double> prev_step,
                        double tau, double target, const ToleranceSet& tol);

/// Starting node for the weighted and moment schemes:
/// min{T_1, tau_0 + max{delta_min, min{delta_max, delta_star0, delta_s}}}.
StepDecision start_step(double delta_star0, Branch branch, double delta_s, double tau0,
                        double target, const ToleranceSet& tol);

enum class DiscrepancyKind { ancillary_increment, ancillary_moment, weighted };

/// Value of the named discrepancy function at step `delta`, with the main tolerances.
double discrepancy_eval(DiscrepancyKind kind, const SdeModel& model, double t, ConstVec y,
                        const ToleranceSet& tol, double delta, ConstVec grad_phi = {},
                        const Matrix* hess_phi = nullptr);

}  // namespace wsde
