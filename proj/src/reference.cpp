#include "wsde/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "wsde/errors.hpp"

namespace wsde {

namespace {

constexpr double kZMax = 40.0;

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

double gaussian_expectation(const std::function<double(double)>& f, std::vector<double> breaks) {
  breaks.push_back(-kZMax);
  breaks.push_back(0.0);
  breaks.push_back(kZMax);
  breaks.erase(std::remove_if(breaks.begin(), breaks.end(),
                              [](double b) { return !(std::abs(b) <= kZMax); }),
               breaks.end());
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  auto g = [&](double z) {
    const double p = normal_pdf(z);
    return p == 0.0 ? 0.0 : f(z) * p;
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, breaks[i],
                                                                           breaks[i + 1], 15, 1e-12);
  return total;
}

double gbm_log1p_square_mean(double sigma, double x0, double t) {
  if (!(t >= 0.0)) throw ConfigurationError("reference time must be non-negative");
  if (t == 0.0 || sigma == 0.0) return std::log1p(x0 * x0);
  if (x0 == 0.0) return 0.0;
  const double s = sigma * std::sqrt(t);
  const double shift = std::log(std::abs(x0)) - 0.5 * sigma * sigma * t;
  // log(1 + e^{2l}) without overflow
  auto f = [&](double z) {
    const double l2 = 2.0 * (shift + s * z);
    return l2 > 0.0 ? l2 + std::log1p(std::exp(-l2)) : std::log1p(std::exp(l2));
  };
  // |X| = 1 at z0; below it the integrand peaks near 2s.
  const double z0 = -shift / s;
  return gaussian_expectation(f, {z0, std::min(z0, 2.0 * s)});
}

double additive_cube_mean(double sigma, double x0, double t) {
  if (!(t >= 0.0)) throw ConfigurationError("reference time must be non-negative");
  return std::exp(-t * t * t) *
         (x0 * x0 * x0 + 3.0 * sigma * sigma * x0 * (1.0 - 1.0 / (t + 1.0)));
}

double coupled_invariant_mean(double alpha, double x1, double x2, double t) {
  if (!(t >= 0.0)) throw ConfigurationError("reference time must be non-negative");
  const double u0 = (3.0 * x1 + x2) / 7.0, v0 = (x1 - 2.0 * x2) / 7.0;
  if (!(std::abs(u0) < std::numbers::pi / 2))
    throw ConfigurationError("coupled reference needs |3 x1 + x2| / 7 < pi/2");
  const double c = std::tan(u0), s = alpha * std::sqrt(t);
  if (s == 0.0) return u0 * u0 + std::asinh(v0);
  auto f = [&](double z) {
    const double a = std::atan(s * z + c);
    return a * a;
  };
  const double kink = -c / s;
  // The integrand changes on the scale 1/s around the kink.
  return gaussian_expectation(f, {kink - 10.0 / s, kink, kink + 10.0 / s}) + std::asinh(v0);
}

}  // namespace wsde
