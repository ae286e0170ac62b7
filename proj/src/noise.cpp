#include "wsde/noise.hpp"

#include <boost/random/normal_distribution.hpp>
#include <cmath>

#include "wsde/errors.hpp"

namespace wsde {

VariateFamily parse_variate_family(const std::string& s) {
  if (s == "gaussian") return VariateFamily::gaussian;
  if (s == "three_point") return VariateFamily::three_point;
  throw ConfigurationError("unknown variate family '" + s + "'");
}

std::string to_string(VariateFamily f) {
  return f == VariateFamily::gaussian ? "gaussian" : "three_point";
}

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

// Slot used for the zeta sign bits; normal/three-point slots are driver indices.
constexpr std::uint32_t kSignSlot = 0xFFFFu;

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> c,
                                           std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

// Counter words: [0] block index, [1] high path bits | slot, [2] step, [3] low path bits.
PhiloxEngine NoiseStream::engine(std::uint32_t slot) const {
  const auto path_hi = static_cast<std::uint32_t>(path_ >> 32);
  return PhiloxEngine({0u, (path_hi << 16) | (slot & 0xFFFFu), static_cast<std::uint32_t>(counter_),
                       static_cast<std::uint32_t>(path_)},
                      {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
}

namespace {

// 64-bit view of the Philox block sequence; the ziggurat needs one draw in
// almost every call.
class Philox64 {
 public:
  using result_type = std::uint64_t;
  Philox64(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key)
      : ctr_(ctr), key_(key) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() {
    if (used_ == 2) {
      block_ = philox4x32_10(ctr_, key_);
      ++ctr_[0];
      used_ = 0;
    }
    const int i = 2 * used_++;
    return (std::uint64_t{block_[i]} << 32) | block_[i + 1];
  }

 private:
  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 2;
};

}  // namespace

double NoiseStream::normal(std::uint32_t slot) const {
  const auto path_hi = static_cast<std::uint32_t>(path_ >> 32);
  Philox64 eng({0u, (path_hi << 16) | (slot & 0xFFFFu), static_cast<std::uint32_t>(counter_),
                static_cast<std::uint32_t>(path_)},
               {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
  boost::random::normal_distribution<double> dist;
  return dist(eng);
}

double NoiseStream::three_point(std::uint32_t slot) const {
  auto eng = engine(slot);
  const std::uint64_t w = (std::uint64_t{eng()} << 32) | eng();
  switch (w % 6) {
    case 0:
      return -std::sqrt(3.0);
    case 1:
      return std::sqrt(3.0);
    default:
      return 0.0;
  }
}

double NoiseStream::rademacher(std::uint32_t index) const {
  auto eng = engine(kSignSlot);
  std::uint32_t word = 0;
  for (std::uint32_t i = 0; i <= index / 32; ++i) word = eng();
  return ((word >> (index % 32)) & 1u) ? 1.0 : -1.0;
}

void brownian_increments(NoiseStream& stream, double dt, MutVec out, VariateFamily family) {
  if (dt < 0.0) throw ContractViolation("negative step in brownian_increments");
  const double scale = std::sqrt(dt);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto slot = static_cast<std::uint32_t>(k);
    out[k] = scale * (family == VariateFamily::gaussian ? stream.normal(slot)
                                                        : stream.three_point(slot));
  }
  stream.advance();
}

Vector brownian_increments(NoiseStream& stream, double dt, std::size_t m, VariateFamily family) {
  Vector out(m);
  brownian_increments(stream, dt, out, family);
  return out;
}

void weak_variates(NoiseStream& stream, VariateFamily family, MutVec xi, MutVec zeta) {
  for (std::size_t k = 0; k < xi.size(); ++k) {
    const auto slot = static_cast<std::uint32_t>(k);
    xi[k] = family == VariateFamily::gaussian ? stream.normal(slot) : stream.three_point(slot);
  }
  if (!zeta.empty()) {
    auto eng = stream.engine(kSignSlot);
    std::uint32_t word = 0;
    for (std::size_t k = 0; k < zeta.size(); ++k) {
      if (k % 32 == 0) word = eng();
      zeta[k] = ((word >> (k % 32)) & 1u) ? 1.0 : -1.0;
    }
  }
  stream.advance();
}

WeakVariates weak_variates(NoiseStream& stream, std::size_t m, VariateFamily family) {
  WeakVariates v{Vector(m), Vector(m)};
  weak_variates(stream, family, v.xi, v.zeta);
  return v;
}

Matrix levy_area_proxy(ConstVec xi, ConstVec zeta) {
  if (xi.size() != zeta.size()) throw ContractViolation("xi and zeta lengths differ");
  const std::size_t m = xi.size();
  Matrix out(m, m);
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t l = 0; l < m; ++l) out(k, l) = levy_area_entry(xi, zeta, k, l);
  return out;
}

}  // namespace wsde
