#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>

#include "wsde/sde_model.hpp"

namespace wsde {

/// Philox4x32-10 counter-based generator.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);

/// Uniform random bit generator reading consecutive Philox blocks; the first
/// counter word is the block index. Satisfies std::uniform_random_bit_generator.
class PhiloxEngine {
 public:
  using result_type = std::uint32_t;
  PhiloxEngine(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key)
      : ctr_(ctr), key_(key) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() {
    if (used_ == 4) {
      block_ = philox4x32_10(ctr_, key_);
      ++ctr_[0];
      used_ = 0;
    }
    return block_[used_++];
  }

 private:
  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
};

enum class VariateFamily { gaussian, three_point };
VariateFamily parse_variate_family(const std::string& s);
std::string to_string(VariateFamily f);

/// Deterministic variate source for one Monte-Carlo path. Every value is a
/// pure function of (seed, path, step, slot), so paths can be simulated in any
/// order on any thread. `counter` is the step index.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t path, std::uint64_t counter = 0)
      : seed_(seed), path_(path), counter_(counter) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t path() const { return path_; }
  std::uint64_t counter() const { return counter_; }
  void advance() { ++counter_; }

  // Raw engine for (current step, slot).
  PhiloxEngine engine(std::uint32_t slot) const;

  double normal(std::uint32_t slot) const;
  double three_point(std::uint32_t slot) const;
  // +1 or -1, one bit per driver.
  double rademacher(std::uint32_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t path_;
  std::uint64_t counter_;
};

/// m independent N(0, dt) draws for the current step, then advances the stream.
/// With the three_point family the draws are sqrt(dt) times three-point variates.
void brownian_increments(NoiseStream& stream, double dt, MutVec out,
                         VariateFamily family = VariateFamily::gaussian);
Vector brownian_increments(NoiseStream& stream, double dt, std::size_t m,
                           VariateFamily family = VariateFamily::gaussian);

/// xi (mean 0, variance 1, symmetric) and independent zeta (+-1) for the
/// current step, then advances the stream.
void weak_variates(NoiseStream& stream, VariateFamily family, MutVec xi, MutVec zeta);
struct WeakVariates {
  Vector xi;
  Vector zeta;
};
WeakVariates weak_variates(NoiseStream& stream, std::size_t m, VariateFamily family);

/// Surrogate for the iterated integrals divided by the step:
///   k < l: (xi_k xi_l + zeta_k zeta_l) / 2
///   k = l: (xi_k^2 - 1) / 2
///   k > l: (xi_k xi_l - zeta_k zeta_l) / 2
inline double levy_area_entry(ConstVec xi, ConstVec zeta, std::size_t k, std::size_t l) {
  if (k == l) return 0.5 * (xi[k] * xi[k] - 1.0);
  const double z = zeta[k] * zeta[l];
  return 0.5 * (xi[k] * xi[l] + (k < l ? z : -z));
}
Matrix levy_area_proxy(ConstVec xi, ConstVec zeta);

}  // namespace wsde
