#include "wsde/sde_model.hpp"

#include <cmath>
#include <limits>

#include "wsde/errors.hpp"

namespace wsde {

LocalCoefficients::LocalCoefficients(std::size_t dim, std::size_t noise)
    : d(dim),
      m(noise),
      b(dim),
      l0b(dim),
      sigma_(dim * noise),
      lkb_(dim * noise),
      l0sigma_(dim * noise),
      lksigma_(dim * noise * noise) {}

void LocalCoefficients::clear() {
  for (auto* v : {&b, &l0b, &sigma_, &lkb_, &l0sigma_, &lksigma_}) std::fill(v->begin(), v->end(), 0.0);
}

namespace {

bool finite_all(const Vector& v) {
  for (double e : v)
    if (!std::isfinite(e)) return false;
  return true;
}

}  // namespace

bool LocalCoefficients::all_finite(CoefficientLevel level) const {
  if (!finite_all(b) || !finite_all(sigma_)) return false;
  if (level == CoefficientLevel::basic) return true;
  return finite_all(l0b) && finite_all(lkb_) && finite_all(l0sigma_) && finite_all(lksigma_);
}

SdeModel::SdeModel(std::size_t d, std::size_t m, bool autonomous)
    : d_(d), m_(m), autonomous_(autonomous) {
  if (d == 0 || m == 0) throw ConfigurationError("SDE dimensions must be positive");
}

void SdeModel::evaluate_checked(double t, ConstVec x, CoefficientLevel level,
                                LocalCoefficients& out) const {
  evaluate(t, x, level, out);
  if (out.all_finite(level)) return;
  const char* which = "drift";
  if (!finite_all(out.b)) which = "drift";
  else if (!finite_all(out.sigma_)) which = "diffusion";
  else if (!finite_all(out.l0b)) which = "l0_drift";
  else if (!finite_all(out.lkb_)) which = "lk_drift";
  else if (!finite_all(out.l0sigma_)) which = "l0_diffusion";
  else which = "lk_diffusion";
  throw ModelEvaluationError(t, x, which);
}

LocalCoefficients SdeModel::at(double t, ConstVec x, CoefficientLevel level) const {
  if (x.size() != d_) throw ContractViolation("state has wrong dimension");
  LocalCoefficients c(d_, m_);
  evaluate_checked(t, x, level, c);
  return c;
}

Vector SdeModel::drift(double t, ConstVec x) const { return at(t, x, CoefficientLevel::basic).b; }

Vector SdeModel::diffusion(double t, ConstVec x, std::size_t k) const {
  if (k >= m_) throw ContractViolation("driver index out of range");
  auto c = at(t, x, CoefficientLevel::basic);
  auto s = c.sigma(k);
  return {s.begin(), s.end()};
}

Vector SdeModel::l0_drift(double t, ConstVec x) const { return at(t, x, CoefficientLevel::full).l0b; }

Vector SdeModel::lk_drift(double t, ConstVec x, std::size_t k) const {
  if (k >= m_) throw ContractViolation("driver index out of range");
  auto c = at(t, x, CoefficientLevel::full);
  auto s = c.lkb(k);
  return {s.begin(), s.end()};
}

Vector SdeModel::l0_diffusion(double t, ConstVec x, std::size_t k) const {
  if (k >= m_) throw ContractViolation("driver index out of range");
  auto c = at(t, x, CoefficientLevel::full);
  auto s = c.l0sigma(k);
  return {s.begin(), s.end()};
}

Vector SdeModel::lk_diffusion(double t, ConstVec x, std::size_t k, std::size_t l) const {
  if (k >= m_ || l >= m_) throw ContractViolation("driver index out of range");
  auto c = at(t, x, CoefficientLevel::full);
  auto s = c.lksigma(k, l);
  return {s.begin(), s.end()};
}

// ---------------------------------------------------------------------------
// Finite-difference decorator

double default_fd_step() { return std::cbrt(std::numeric_limits<double>::epsilon()); }

namespace {

class FiniteDifferenceModel final : public SdeModel {
 public:
  FiniteDifferenceModel(DriftDiffusion f, double rel_step)
      : SdeModel(f.d, f.m, f.autonomous), f_(std::move(f)), h_(rel_step) {
    if (!(rel_step > 0.0)) throw ConfigurationError("finite-difference step must be positive");
    if (!f_.drift || !f_.diffusion) throw ConfigurationError("drift and diffusion are required");
  }

  void evaluate(double t, ConstVec x, CoefficientLevel level,
                LocalCoefficients& out) const override {
    const std::size_t d = dim(), m = noise_dim(), n = d * (m + 1);
    Vector g0(n);
    stacked(t, x, g0);
    std::copy(g0.begin(), g0.begin() + d, out.b.begin());
    std::copy(g0.begin() + d, g0.end(), out.sigma_.begin());
    if (level == CoefficientLevel::basic) return;

    // Jacobian columns and Hessians of the stacked coefficient vector g = (b, sigma_0, ...).
    Matrix jac(n, d);
    std::vector<Matrix> hess(n, Matrix(d, d));
    Vector xp(x.begin(), x.end()), gp(n), gm(n), gpp(n), gpm(n), gmp(n), gmm(n);
    std::vector<double> h1(d), h2(d);
    for (std::size_t j = 0; j < d; ++j) {
      h1[j] = h_ * (1.0 + std::abs(x[j]));
      h2[j] = 10.0 * h1[j];
    }
    for (std::size_t j = 0; j < d; ++j) {
      xp[j] = x[j] + h1[j];
      stacked(t, xp, gp);
      xp[j] = x[j] - h1[j];
      stacked(t, xp, gm);
      for (std::size_t r = 0; r < n; ++r) jac(r, j) = (gp[r] - gm[r]) / (2.0 * h1[j]);
      xp[j] = x[j] + h2[j];
      stacked(t, xp, gp);
      xp[j] = x[j] - h2[j];
      stacked(t, xp, gm);
      xp[j] = x[j];
      for (std::size_t r = 0; r < n; ++r)
        hess[r](j, j) = (gp[r] - 2.0 * g0[r] + gm[r]) / (h2[j] * h2[j]);
    }
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i + 1; j < d; ++j) {
        auto corner = [&](double si, double sj, Vector& out_g) {
          xp[i] = x[i] + si * h2[i];
          xp[j] = x[j] + sj * h2[j];
          stacked(t, xp, out_g);
          xp[i] = x[i];
          xp[j] = x[j];
        };
        corner(1, 1, gpp);
        corner(1, -1, gpm);
        corner(-1, 1, gmp);
        corner(-1, -1, gmm);
        for (std::size_t r = 0; r < n; ++r) {
          double v = (gpp[r] - gpm[r] - gmp[r] + gmm[r]) / (4.0 * h2[i] * h2[j]);
          hess[r](i, j) = v;
          hess[r](j, i) = v;
        }
      }
    }
    Vector dt(n, 0.0);
    if (!autonomous()) {
      double ht = h_ * (1.0 + std::abs(t));
      stacked(t + ht, x, gp);
      stacked(t - ht, x, gm);
      for (std::size_t r = 0; r < n; ++r) dt[r] = (gp[r] - gm[r]) / (2.0 * ht);
    }

    // a = sum_k sigma_k sigma_k^T
    Matrix a(d, d);
    for (std::size_t k = 0; k < m; ++k) {
      auto s = out.sigma(k);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) a(i, j) += s[i] * s[j];
    }
    auto l0 = [&](std::size_t r) {
      double v = dt[r];
      for (std::size_t j = 0; j < d; ++j) v += out.b[j] * jac(r, j);
      double second = 0.0;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) second += a(i, j) * hess[r](i, j);
      return v + 0.5 * second;
    };
    auto lk = [&](std::size_t k, std::size_t r) {
      auto s = out.sigma(k);
      double v = 0.0;
      for (std::size_t j = 0; j < d; ++j) v += s[j] * jac(r, j);
      return v;
    };
    for (std::size_t i = 0; i < d; ++i) out.l0b[i] = l0(i);
    for (std::size_t k = 0; k < m; ++k) {
      auto lb = out.lkb(k);
      auto l0s = out.l0sigma(k);
      for (std::size_t i = 0; i < d; ++i) {
        lb[i] = lk(k, i);
        l0s[i] = l0(d * (k + 1) + i);
      }
      for (std::size_t l = 0; l < m; ++l) {
        auto ls = out.lksigma(k, l);
        for (std::size_t i = 0; i < d; ++i) ls[i] = lk(k, d * (l + 1) + i);
      }
    }
  }

 private:
  void stacked(double t, ConstVec x, Vector& g) const {
    const std::size_t d = dim();
    f_.drift(t, x, MutVec(g.data(), d));
    for (std::size_t i = 0; i < d; ++i)
      if (!std::isfinite(g[i])) throw ModelEvaluationError(t, x, "drift");
    for (std::size_t k = 0; k < noise_dim(); ++k) {
      MutVec s(g.data() + d * (k + 1), d);
      f_.diffusion(t, x, k, s);
      for (double v : s)
        if (!std::isfinite(v)) throw ModelEvaluationError(t, x, "diffusion");
    }
  }

  DriftDiffusion f_;
  double h_;
};

}  // namespace

ModelPtr finite_difference_operators(DriftDiffusion f, double rel_step) {
  return std::make_shared<FiniteDifferenceModel>(std::move(f), rel_step);
}

ModelPtr finite_difference_operators(ModelPtr model, double rel_step) {
  if (!model) throw ConfigurationError("null model");
  DriftDiffusion f;
  f.d = model->dim();
  f.m = model->noise_dim();
  f.autonomous = model->autonomous();
  f.drift = [model](double t, ConstVec x, MutVec out) {
    LocalCoefficients c(model->dim(), model->noise_dim());
    model->evaluate(t, x, CoefficientLevel::basic, c);
    std::copy(c.b.begin(), c.b.end(), out.begin());
  };
  f.diffusion = [model](double t, ConstVec x, std::size_t k, MutVec out) {
    LocalCoefficients c(model->dim(), model->noise_dim());
    model->evaluate(t, x, CoefficientLevel::basic, c);
    auto s = c.sigma(k);
    std::copy(s.begin(), s.end(), out.begin());
  };
  return finite_difference_operators(std::move(f), rel_step);
}

}  // namespace wsde
