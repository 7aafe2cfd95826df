#pragma once

// Seedable, splittable PRNG (xoshiro256++ seeded through splitmix64) plus the
// variate transforms the samplers need. Substreams are derived from the
// stream's root seed and a label, never from the current state, so the stream
// tree is stable regardless of how much randomness a parent has consumed.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace wfibp {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t rotl(std::uint64_t v, int k) {
  return (v << k) | (v >> (64 - k));
}

}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : root_(seed) {
    std::uint64_t sm = seed;
    for (auto& w : state_) w = detail::splitmix64(sm);
  }

  std::uint64_t root_seed() const { return root_; }

  std::uint64_t next_u64() {
    const std::uint64_t result =
        detail::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0,1).
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform on (0,1); safe to pass to log().
  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return u;
  }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Marsaglia-Tsang; shape < 1 handled by the boosting identity.
  double gamma(double shape, double scale = 1.0) {
    if (shape <= 0.0 || scale <= 0.0)
      throw std::invalid_argument("gamma: shape and scale must be positive");
    if (shape < 1.0) {
      const double u = uniform_pos();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return d * v * scale;
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    const double s = x + y;
    if (s <= 0.0) {
      // Both gammas underflowed (tiny shapes); fall back on the marginal
      // odds of which component dominates.
      return bernoulli(a / (a + b)) ? 1.0 : 0.0;
    }
    return x / s;
  }

  long poisson(double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("poisson: negative rate");
    if (lambda == 0.0) return 0;
    if (lambda < 30.0) {
      // Knuth.
      const double l = std::exp(-lambda);
      long k = 0;
      double p = 1.0;
      do {
        ++k;
        p *= uniform();
      } while (p > l);
      return k - 1;
    }
    // Hormann's transformed rejection (PTRS).
    const double b = 0.931 + 2.53 * std::sqrt(lambda);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    const double log_lambda = std::log(lambda);
    for (;;) {
      double u = uniform() - 0.5;
      double v = uniform();
      const double us = 0.5 - std::fabs(u);
      const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<long>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          k * log_lambda - lambda - std::lgamma(k + 1.0))
        return static_cast<long>(k);
    }
  }

  /// Index draw proportional to (unnormalized, nonnegative) weights.
  int categorical(const std::vector<double>& w) {
    double total = 0.0;
    for (double x : w) total += x;
    if (!(total > 0.0))
      throw std::invalid_argument("categorical: weights sum to zero");
    double u = uniform() * total;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      u -= w[i];
      if (u < 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(w.size()) - 1;
  }

  Rng substream(std::string_view label) const {
    std::uint64_t mix = root_ ^ detail::rotl(detail::fnv1a(label), 31);
    return Rng(detail::splitmix64(mix));
  }

  Rng substream(std::string_view label, std::uint64_t index) const {
    std::uint64_t mix = root_ ^ detail::rotl(detail::fnv1a(label), 31);
    mix = detail::splitmix64(mix);
    mix ^= detail::rotl(index * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull, 17);
    return Rng(detail::splitmix64(mix));
  }

  Rng substream(std::uint64_t index) const { return substream("idx", index); }

  // State accessors for checkpointing.
  std::vector<std::uint64_t> serialize() const {
    return {root_, state_[0], state_[1], state_[2], state_[3]};
  }
  static Rng deserialize(const std::vector<std::uint64_t>& v) {
    if (v.size() != 5) throw std::invalid_argument("rng state: bad size");
    Rng r(v[0]);
    for (int i = 0; i < 4; ++i) r.state_[i] = v[i + 1];
    return r;
  }

 private:
  std::uint64_t root_;
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace wfibp
