#include "gpsep/rng.hpp"

#include <cmath>

#include "gpsep/common.hpp"

namespace gpsep {

double Rng::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 6.283185307179586476925286766559 * u2;
  cached_normal_ = radius * std::sin(angle);
  have_cached_normal_ = true;
  return radius * std::cos(angle);
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw InputError("Rng::gamma: shape must be positive");
  if (shape < 1.0) {
    // boost trick: G(a) = G(a+1) * U^{1/a}
    const double g = gamma(shape + 1.0);
    return g * std::pow(uniform(), 1.0 / shape);
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
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::exponential(double rate) {
  if (!(rate > 0.0)) throw InputError("Rng::exponential: rate must be positive");
  return -std::log(uniform()) / rate;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return Rng::mix(Rng::mix(seed ^ Rng::mix(a)) ^ Rng::mix(b));
}

Rng derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return Rng(derive_seed(seed, a, b));
}

}  // namespace gpsep
