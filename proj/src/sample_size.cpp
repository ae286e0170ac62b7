#include "wsde/sample_size.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <numbers>
#include <thread>

#include "wsde/errors.hpp"

namespace wsde {

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
  else comp_ += (x - t) + sum_;
  sum_ = t;
}

void CompensatedSum::merge(const CompensatedSum& o) {
  add(o.sum_);
  comp_ += o.comp_;
}

void MomentAccumulator::add(double x) {
  const double a = std::abs(x);
  f_[0].add(x);
  f_[1].add(x * x);
  f_[2].add(x * a);
  f_[3].add(a * a * a);
  ++n_;
}

void MomentAccumulator::merge(const MomentAccumulator& o) {
  for (int j = 0; j < 4; ++j) f_[j].merge(o.f_[j]);
  n_ += o.n_;
  diverged_ += o.diverged_;
}

MomentSummary MomentAccumulator::summary() const {
  MomentSummary s;
  s.count = n_;
  if (n_ == 0) return s;
  const double n = static_cast<double>(n_);
  s.f1 = f_[0].value() / n;
  s.f2 = f_[1].value() / n;
  s.f3 = f_[2].value() / n;
  s.f4 = f_[3].value() / n;
  s.sigma = std::sqrt(std::max(0.0, s.f2 - s.f1 * s.f1));
  return s;
}

void SamplerConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigurationError("delta must lie in (0, 1)");
  if (!(as_tol > 0.0) || !(rs_tol > 0.0)) throw ConfigurationError("sample tolerances must be positive");
  if (s_min < 1 || s_min > s_max) throw ConfigurationError("need 1 <= s_min <= s_max");
  if (!(sfac_max > 1.0)) throw ConfigurationError("sfac_max must exceed 1");
  if (chunk < 1) throw ConfigurationError("chunk must be positive");
}

double bikelis_lhs(double eps, double sigma, double f1, double f2, double f3, double f4,
                   double s) {
  const double rs = std::sqrt(s);
  double gauss = 0.0;
  if (sigma > 0.0) {
    gauss = std::sqrt(2.0 / std::numbers::pi) * sigma /
            (eps * rs + std::sqrt(2.0 * sigma * sigma + eps * eps * s)) *
            std::exp(-eps * eps * s / (2.0 * sigma * sigma));
  }
  const double third = std::max(0.0, f4 + std::abs(f1) * f2 - 2.0 * f1 * f3);
  const double base = sigma + eps * rs;
  return gauss + third / (rs * base * base * base);
}

std::uint64_t solve_sample_size(double eps, double sigma, double f1, double f2, double f3,
                                double f4, double delta) {
  const double target = delta / 2.0;
  auto ok = [&](std::uint64_t s) {
    return bikelis_lhs(eps, sigma, f1, f2, f3, f4, static_cast<double>(s)) <= target;
  };
  if (ok(1)) return 1;
  std::uint64_t lo = 1, hi = 2;
  constexpr std::uint64_t kCeiling = std::uint64_t{1} << 62;
  while (!ok(hi)) {
    if (hi >= kCeiling) return hi;
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (ok(mid)) hi = mid;
    else lo = mid;
  }
  return hi;
}

unsigned default_workers() {
  if (const char* env = std::getenv("WSDE_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------

namespace {

class SdeSimulator final : public PathSimulator {
 public:
  SdeSimulator(const SchemeId& scheme, ModelPtr model, Vector y0, std::vector<double> targets,
               const ToleranceSet& tol, std::shared_ptr<const Observable> obs, std::uint64_t seed,
               VariateFamily family, std::function<void(std::uint64_t, MutVec)> initial)
      : obs_(std::move(obs)),
        runner_(scheme, std::move(model), tol, std::move(targets), obs_.get(), family),
        y0_(std::move(y0)),
        values_(obs_->count()),
        seed_(seed),
        initial_(std::move(initial)) {}

  std::size_t simulate(std::uint64_t path, std::size_t last, const Sink& sink) override {
    if (initial_) initial_(path, y0_);
    auto visit = [&](std::size_t k, ConstVec y, bool diverged) {
      if (!diverged) obs_->values(y, values_);
      sink(k, values_, diverged);
    };
    return runner_.run(y0_, NoiseStream(seed_, path), last, visit).steps;
  }

 private:
  std::shared_ptr<const Observable> obs_;
  PathRunner runner_;
  Vector y0_;
  Vector values_;
  std::uint64_t seed_;
  std::function<void(std::uint64_t, MutVec)> initial_;
};

struct ChunkResult {
  std::vector<MomentAccumulator> acc;  // k * J + j
  CompensatedSum steps;
  std::uint64_t full = 0;
};

// Path indices [begin, end).
struct Range {
  std::uint64_t begin, end;
};

}  // namespace

PathSource sde_path_source(SchemeId scheme, ModelPtr model, Vector y0, std::vector<double> targets,
                           ToleranceSet tol, Observable observable, std::uint64_t seed,
                           VariateFamily family,
                           std::function<void(std::uint64_t path, MutVec y0)> initial) {
  if (y0.size() != model->dim()) throw ConfigurationError("initial state has wrong dimension");
  auto obs = std::make_shared<const Observable>(std::move(observable));
  PathSource src;
  src.targets = targets.size();
  src.observables = obs->count();
  src.make = [=]() -> std::unique_ptr<PathSimulator> {
    return std::make_unique<SdeSimulator>(scheme, model, y0, targets, tol, obs, seed, family,
                                          initial);
  };
  // Fail early on bad settings instead of inside a worker thread.
  src.make();
  return src;
}

EstimateResult adaptive_estimate(const PathSource& source, const SamplerConfig& cfg) {
  cfg.validate();
  const std::size_t M = source.targets, J = source.observables;
  if (M == 0 || J == 0 || !source.make) throw ConfigurationError("empty path source");
  const unsigned workers = cfg.workers ? cfg.workers : default_workers();

  std::vector<std::unique_ptr<PathSimulator>> sims;
  for (unsigned w = 0; w < workers; ++w) sims.push_back(source.make());

  std::vector<MomentAccumulator> acc(M * J);
  std::vector<std::uint64_t> s_now(M, cfg.s_min), s_old(M, 0), s_new(M, 0);
  std::size_t mstar = M;
  CompensatedSum full_steps;
  std::uint64_t full_paths = 0;

  EstimateResult res;
  res.history.push_back(s_now);

  // In independent mode target k uses path ids offset by k << 40.
  auto path_id = [&](std::size_t k, std::uint64_t s) {
    return cfg.independent_sets ? (std::uint64_t{k} << 40) + s : s;
  };

  auto simulate_chunk = [&](PathSimulator& sim, std::size_t k_only, Range r, ChunkResult& out) {
    out.acc.assign(M * J, MomentAccumulator{});
    std::uint64_t cur_path = 0;
    std::size_t cur_last = 0;
    auto sink = [&](std::size_t k, ConstVec values, bool diverged) {
      const bool record = cfg.independent_sets ? k == k_only
                                               : (s_old[k] <= cur_path && cur_path < s_now[k]);
      if (!record) return;
      for (std::size_t j = 0; j < J; ++j) {
        auto& a = out.acc[k * J + j];
        if (diverged || !std::isfinite(values[j])) a.add_diverged();
        else a.add(values[j]);
      }
    };
    for (std::uint64_t p = r.begin; p < r.end; ++p) {
      cur_path = p;
      if (cfg.independent_sets) {
        cur_last = k_only;
      } else {
        // Largest target index needing this path.
        std::size_t last = M;
        for (std::size_t k = 0; k < mstar; ++k)
          if (s_old[k] <= p && p < s_now[k]) last = k;
        if (last == M) continue;
        cur_last = last;
      }
      const std::size_t steps = sim.simulate(path_id(k_only, p), cur_last, sink);
      if (cur_last == M - 1) {
        out.steps.add(static_cast<double>(steps));
        ++out.full;
      }
    }
  };

  // Work items for this iteration in a fixed order.
  struct Item {
    std::size_t k;
    Range r;
  };

  while (true) {
    std::vector<Item> items;
    auto push_ranges = [&](std::size_t k, std::uint64_t lo, std::uint64_t hi) {
      for (std::uint64_t c = lo / cfg.chunk; c * cfg.chunk < hi; ++c)
        items.push_back({k, {std::max(lo, c * cfg.chunk), std::min(hi, (c + 1) * cfg.chunk)}});
    };
    if (cfg.independent_sets) {
      for (std::size_t k = 0; k < mstar; ++k)
        if (s_now[k] > s_old[k]) push_ranges(k, s_old[k], s_now[k]);
    } else {
      std::uint64_t lo = std::numeric_limits<std::uint64_t>::max(), hi = 0;
      for (std::size_t k = 0; k < mstar; ++k) {
        if (s_now[k] > s_old[k]) {
          lo = std::min(lo, s_old[k]);
          hi = std::max(hi, s_now[k]);
        }
      }
      if (hi > lo) push_ranges(0, lo, hi);
    }

    // Fixed-size batches bound the memory held by per-chunk results.
    constexpr std::size_t kBatch = 4096;
    for (std::size_t b0 = 0; b0 < items.size(); b0 += kBatch) {
      const std::size_t b1 = std::min(items.size(), b0 + kBatch);
      std::vector<ChunkResult> results(b1 - b0);
      std::atomic<std::size_t> next{b0};
      std::exception_ptr error;
      std::atomic<bool> failed{false};
      auto work = [&](PathSimulator& sim) {
        try {
          for (std::size_t i = next++; i < b1 && !failed; i = next++)
            simulate_chunk(sim, items[i].k, items[i].r, results[i - b0]);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      };
      const unsigned n_threads = std::min<std::size_t>(workers, b1 - b0);
      if (n_threads <= 1) {
        work(*sims[0]);
      } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < n_threads; ++w) pool.emplace_back(work, std::ref(*sims[w]));
        for (auto& t : pool) t.join();
      }
      if (error) std::rethrow_exception(error);
      for (auto& r : results) {
        for (std::size_t i = 0; i < M * J; ++i) acc[i].merge(r.acc[i]);
        full_steps.merge(r.steps);
        full_paths += r.full;
      }
    }
    ++res.iterations;
    res.horizon.push_back(mstar);

    // Required sample sizes for the active targets.
    bool done = true;
    for (std::size_t k = 0; k < mstar; ++k) {
      std::uint64_t need = 0;
      for (std::size_t j = 0; j < J; ++j) {
        const auto& a = acc[k * J + j];
        if (a.diverged() > 0) continue;
        const auto s = a.summary();
        const double eps = cfg.as_tol + cfg.rs_tol * std::abs(s.f1);
        need = std::max(need, solve_sample_size(eps, s.sigma, s.f1, s.f2, s.f3, s.f4, cfg.delta));
      }
      s_new[k] = need;
      if (std::min(need, cfg.s_max) > s_now[k]) done = false;
    }
    if (done) break;

    for (std::size_t k = 0; k < mstar; ++k) s_old[k] = s_now[k];
    if (cfg.uniform_rule) {
      const std::uint64_t need = *std::max_element(s_new.begin(), s_new.begin() + mstar);
      for (std::size_t k = 0; k < mstar; ++k) {
        const double grown = cfg.sfac_max * static_cast<double>(s_now[k]);
        const std::uint64_t cap = grown >= static_cast<double>(cfg.s_max)
                                      ? cfg.s_max
                                      : static_cast<std::uint64_t>(grown);
        s_now[k] = std::max(s_now[k], std::min({need, cap, cfg.s_max}));
      }
    } else {
      std::vector<std::uint64_t> ds(mstar, 0);
      std::uint64_t suffix = 0;
      for (std::size_t k = mstar; k-- > 0;) {
        const double grown = cfg.sfac_max * static_cast<double>(s_now[k]);
        const std::uint64_t cap = grown >= static_cast<double>(cfg.s_max)
                                      ? cfg.s_max
                                      : static_cast<std::uint64_t>(grown);
        const std::uint64_t want = std::min({s_new[k], cap, cfg.s_max});
        if (want > s_now[k]) suffix = std::max(suffix, want - s_now[k]);
        ds[k] = suffix;
      }
      if (ds[mstar - 1] == 0) {
        std::size_t first_zero = 0;
        while (ds[first_zero] != 0) ++first_zero;
        mstar = first_zero + 1;
      }
      for (std::size_t k = 0; k < mstar; ++k) s_now[k] += ds[k];
    }
    res.history.push_back(s_now);
  }

  res.targets.resize(M);
  double div_frac = 0.0;
  for (std::size_t k = 0; k < M; ++k) {
    auto& t = res.targets[k];
    t.samples = acc[k * J].count() + acc[k * J].diverged();
    t.required = s_new[k];
    t.budget_capped = s_new[k] > s_now[k];
    for (std::size_t j = 0; j < J; ++j) {
      const auto& a = acc[k * J + j];
      const auto s = a.summary();
      t.diverged = std::max(t.diverged, a.diverged());
      if (a.diverged() > 0) {
        t.mean.push_back(std::numeric_limits<double>::infinity());
        t.eps.push_back(std::numeric_limits<double>::infinity());
        t.sigma.push_back(std::numeric_limits<double>::infinity());
      } else {
        t.mean.push_back(s.f1);
        t.eps.push_back(cfg.as_tol + cfg.rs_tol * std::abs(s.f1));
        t.sigma.push_back(s.sigma);
      }
    }
    if (t.samples > 0)
      div_frac = std::max(div_frac, static_cast<double>(t.diverged) / static_cast<double>(t.samples));
    res.budget_capped = res.budget_capped || t.budget_capped;
  }
  res.divergence_fraction = div_frac;
  res.full_paths = full_paths;
  res.mean_steps = full_paths ? full_steps.value() / static_cast<double>(full_paths) : 0.0;
  return res;
}

}  // namespace wsde
