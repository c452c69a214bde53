#ifndef GPSEP_RNG_HPP
#define GPSEP_RNG_HPP

#include <cstdint>

namespace gpsep {

// Counter-based generator (SplitMix64 core). Every draw advances the state by
// a fixed increment, so a stream is a pure function of (seed, counter) and two
// runs with the same seed are bit-identical.
//
// Stream-splitting rule, version 1 (stable; consumers persist it in metadata):
//   substream(seed, a, b) seeds a fresh generator with
//   mix(mix(seed ^ mix(a)) ^ mix(b))
// where mix is the SplitMix64 output function. Chains use a = iteration,
// b = step tag; the coverage study uses a = replication index, b = purpose.
inline constexpr int kRngStreamVersion = 1;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // uniform on the open interval (0, 1)
  double uniform() {
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  double normal();                  // standard normal, Box-Muller pair cache
  double gamma(double shape);       // unit scale, Marsaglia-Tsang
  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }
  double exponential(double rate);  // mean 1/rate

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);
Rng derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

}  // namespace gpsep

#endif
