#pragma once

#include <functional>
#include <vector>

namespace wsde {

/// E f(Z) for Z ~ N(0,1). Adaptive Gauss-Kronrod on [-40, 40], split at
/// `breaks` (points outside the range are ignored).
double gaussian_expectation(const std::function<double(double)>& f,
                            std::vector<double> breaks = {});

/// E log(1 + X_t^2) for X_t = x0 exp(-sigma^2 t / 2 + sigma W_t).
double gbm_log1p_square_mean(double sigma, double x0, double t);

/// E X_t^3 for the additive-noise problem started at a deterministic x0.
double additive_cube_mean(double sigma, double x0, double t);

/// E (u^2 + asinh v) at time t for the coupled problem, where u and v are the
/// decoupled coordinates of the initial point (x1, x2).
double coupled_invariant_mean(double alpha, double x1, double x2, double t);

}  // namespace wsde
