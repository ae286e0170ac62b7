#include <cmath>

#include "wsde/errors.hpp"
#include "wsde/sde_model.hpp"

namespace wsde {

namespace {

using L = CoefficientLevel;

// dX = sigma X dW
class Gbm final : public SdeModel {
 public:
  explicit Gbm(double sigma) : SdeModel(1, 1, true), s_(sigma) {}
  void evaluate(double, ConstVec x, L level, LocalCoefficients& c) const override {
    c.b[0] = 0.0;
    c.sigma_[0] = s_ * x[0];
    if (level == L::basic) return;
    c.l0b[0] = 0.0;
    c.lkb_[0] = 0.0;
    c.l0sigma_[0] = 0.0;
    c.lksigma_[0] = s_ * s_ * x[0];
  }

 private:
  double s_;
};

// dX = aX dt + sigma X dW
class Linear final : public SdeModel {
 public:
  Linear(double a, double sigma) : SdeModel(1, 1, true), a_(a), s_(sigma) {}
  void evaluate(double, ConstVec x, L level, LocalCoefficients& c) const override {
    c.b[0] = a_ * x[0];
    c.sigma_[0] = s_ * x[0];
    if (level == L::basic) return;
    c.l0b[0] = a_ * a_ * x[0];
    c.lkb_[0] = a_ * s_ * x[0];
    c.l0sigma_[0] = a_ * s_ * x[0];
    c.lksigma_[0] = s_ * s_ * x[0];
  }

 private:
  double a_, s_;
};

// dX = ((a + sigma^2/2) X - X^3) dt + sigma X dW
class Landau final : public SdeModel {
 public:
  Landau(double a, double sigma) : SdeModel(1, 1, true), c_(a + 0.5 * sigma * sigma), s_(sigma) {}
  void evaluate(double, ConstVec xs, L level, LocalCoefficients& c) const override {
    const double x = xs[0], x2 = x * x;
    const double b = c_ * x - x2 * x;
    c.b[0] = b;
    c.sigma_[0] = s_ * x;
    if (level == L::basic) return;
    const double db = c_ - 3.0 * x2;
    c.l0b[0] = b * db - 3.0 * s_ * s_ * x2 * x;
    c.lkb_[0] = s_ * x * db;
    c.l0sigma_[0] = s_ * b;
    c.lksigma_[0] = s_ * s_ * x;
  }

 private:
  double c_, s_;
};

// dX = -t^2 X dt + sigma exp(-t^3/3)/(t+1) dW
class Additive final : public SdeModel {
 public:
  explicit Additive(double sigma) : SdeModel(1, 1, false), s_(sigma) {}
  void evaluate(double t, ConstVec xs, L level, LocalCoefficients& c) const override {
    const double x = xs[0], t2 = t * t;
    const double e = std::exp(-t2 * t / 3.0), inv = 1.0 / (t + 1.0);
    const double sig = s_ * e * inv;
    c.b[0] = -t2 * x;
    c.sigma_[0] = sig;
    if (level == L::basic) return;
    c.l0b[0] = -2.0 * t * x + t2 * t2 * x;
    c.lkb_[0] = -t2 * sig;
    c.l0sigma_[0] = s_ * e * (-t2 * inv - inv * inv);
    c.lksigma_[0] = 0.0;
  }

 private:
  double s_;
};

// Two-dimensional system obtained from the decoupled pair
//   dU = -alpha^2 sin U cos^3 U dt + alpha cos^2 U dW1
//   dV = beta^2 V / 2 dt + beta sqrt(1 + V^2) dW2
// through x = (2U + V, U - 3V). The operator images are computed for (U, V)
// and mapped with the same linear transformation.
class Coupled final : public SdeModel {
 public:
  Coupled(double alpha, double beta) : SdeModel(2, 2, true), a_(alpha), b_(beta) {}
  void evaluate(double, ConstVec x, L level, LocalCoefficients& c) const override {
    const double u = (3.0 * x[0] + x[1]) / 7.0;
    const double v = (x[0] - 2.0 * x[1]) / 7.0;
    const double s = std::sin(u), co = std::cos(u), c2 = co * co;
    const double a2 = a_ * a_, b2 = b_ * b_;
    const double r = std::sqrt(1.0 + v * v);

    const double bu = -a2 * s * c2 * co;
    const double bv = 0.5 * b2 * v;
    const double su = a_ * c2;
    const double sv = b_ * r;
    map(bu, bv, c.b.data());
    map(su, 0.0, &c.sigma_[0]);
    map(0.0, sv, &c.sigma_[2]);
    if (level == L::basic) return;

    const double dbu = -a2 * (c2 * c2 - 3.0 * s * s * c2);
    const double ddbu = -a2 * (-10.0 * s * c2 * co + 6.0 * s * s * s * co);
    const double dsu = -2.0 * a_ * s * co;
    const double ddsu = -2.0 * a_ * (c2 - s * s);
    const double dbv = 0.5 * b2;
    const double dsv = b_ * v / r;
    const double ddsv = b_ / (r * r * r);

    map(bu * dbu + 0.5 * su * su * ddbu, bv * dbv, c.l0b.data());
    map(su * dbu, 0.0, &c.lkb_[0]);
    map(0.0, sv * dbv, &c.lkb_[2]);
    map(bu * dsu + 0.5 * su * su * ddsu, 0.0, &c.l0sigma_[0]);
    map(0.0, bv * dsv + 0.5 * sv * sv * ddsv, &c.l0sigma_[2]);
    map(su * dsu, 0.0, &c.lksigma_[0]);  // L1 sigma1
    map(0.0, 0.0, &c.lksigma_[2]);       // L1 sigma2
    map(0.0, 0.0, &c.lksigma_[4]);       // L2 sigma1
    map(0.0, sv * dsv, &c.lksigma_[6]);  // L2 sigma2
  }

 private:
  static void map(double zu, double zv, double* out) {
    out[0] = 2.0 * zu + zv;
    out[1] = zu - 3.0 * zv;
  }

  double a_, b_;
};

// dQ = P dt
// dP = (alpha Q + (beta + s2^2/2) P + gamma Q^3 + delta Q^2 P) dt
//      + s1 Q dW1 + s2 P dW2 + s3 dW3
class DuffingVdp final : public SdeModel {
 public:
  DuffingVdp(double alpha, double beta, double gamma, double delta, double s1, double s2,
             double s3)
      : SdeModel(2, 3, true),
        alpha_(alpha),
        c_(beta + 0.5 * s2 * s2),
        gamma_(gamma),
        delta_(delta),
        s_{s1, s2, s3} {}

  void evaluate(double, ConstVec x, L level, LocalCoefficients& c) const override {
    const double q = x[0], p = x[1], q2 = q * q;
    const double b2 = alpha_ * q + c_ * p + gamma_ * q2 * q + delta_ * q2 * p;
    const double sk[3] = {s_[0] * q, s_[1] * p, s_[2]};
    c.b[0] = p;
    c.b[1] = b2;
    for (int k = 0; k < 3; ++k) {
      c.sigma_[2 * k] = 0.0;
      c.sigma_[2 * k + 1] = sk[k];
    }
    if (level == L::basic) return;

    const double dq = alpha_ + 3.0 * gamma_ * q2 + 2.0 * delta_ * q * p;
    const double dp = c_ + delta_ * q2;
    c.l0b[0] = b2;
    c.l0b[1] = p * dq + b2 * dp;
    const double l0s[3] = {p * s_[0], b2 * s_[1], 0.0};
    for (int k = 0; k < 3; ++k) {
      c.lkb_[2 * k] = sk[k];
      c.lkb_[2 * k + 1] = dp * sk[k];
      c.l0sigma_[2 * k] = 0.0;
      c.l0sigma_[2 * k + 1] = l0s[k];
      for (int l = 0; l < 3; ++l) {
        double* ls = &c.lksigma_[(k * 3 + l) * 2];
        ls[0] = 0.0;
        ls[1] = l == 1 ? s_[1] * sk[k] : 0.0;
      }
    }
  }

 private:
  double alpha_, c_, gamma_, delta_;
  double s_[3];
};

ParameterMap merged(const std::string& name, const ParameterMap& params) {
  ParameterMap p = builtin_defaults(name);
  for (const auto& [key, value] : params) {
    if (!p.count(key)) throw ConfigurationError("unknown parameter '" + key + "' for " + name);
    p[key] = value;
  }
  return p;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"gbm", "linear", "landau", "additive", "coupled", "duffing_vdp"};
}

ParameterMap builtin_defaults(const std::string& name) {
  if (name == "gbm") return {{"sigma", 10.0}, {"x0", 5.0}};
  if (name == "linear") return {{"a", -1.0}, {"sigma", 0.5}, {"x0", 1.0}};
  if (name == "landau") return {{"a", -0.1}, {"sigma", 2.0}, {"x0", 5.0}};
  if (name == "additive") return {{"sigma", 1.0}, {"x0", 1.0}};
  if (name == "coupled") return {{"alpha", 10.0}, {"beta", 0.1}, {"x0_1", 2.0}, {"x0_2", 1.0}};
  if (name == "duffing_vdp")
    return {{"alpha", -1.0}, {"beta", 10.0}, {"gamma", -0.1}, {"delta", -10.0}, {"sigma1", 0.5},
            {"sigma2", 0.5}, {"sigma3", 0.5}, {"q0", 1.0},     {"p0", 1.0}};
  throw ConfigurationError("unknown builtin problem '" + name + "'");
}

ModelPtr builtin_problem(const std::string& name, const ParameterMap& params) {
  auto p = merged(name, params);
  if (name == "gbm") return std::make_shared<Gbm>(p["sigma"]);
  if (name == "linear") return std::make_shared<Linear>(p["a"], p["sigma"]);
  if (name == "landau") return std::make_shared<Landau>(p["a"], p["sigma"]);
  if (name == "additive") return std::make_shared<Additive>(p["sigma"]);
  if (name == "coupled") return std::make_shared<Coupled>(p["alpha"], p["beta"]);
  return std::make_shared<DuffingVdp>(p["alpha"], p["beta"], p["gamma"], p["delta"], p["sigma1"],
                                      p["sigma2"], p["sigma3"]);
}

Vector builtin_initial_state(const std::string& name, const ParameterMap& params) {
  auto p = merged(name, params);
  if (name == "coupled") return {p["x0_1"], p["x0_2"]};
  if (name == "duffing_vdp") return {p["q0"], p["p0"]};
  return {p["x0"]};
}

}  // namespace wsde
