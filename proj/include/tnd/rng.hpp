#pragma once

// Random streams. Scenario draws are counter-based: every Bernoulli draw is a
// pure function of (seed, stream, scenario, trip key, slot), so draws do not
// depend on evaluation order or on which other trips exist. Sequential
// consumers (generator, local search) use `Rng`, whose distributions are
// implemented here so output does not vary between standard libraries.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "tnd/text_io.hpp"

namespace tnd {

constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent stream families derived from one user seed.
enum class Stream : std::uint64_t {
  in_sample = 0x51,
  out_of_sample = 0x52,
  labels = 0x53,
  generator = 0x54,
  search = 0x55,
  current_mode = 0x56,
};

constexpr std::uint64_t stream_key(std::uint64_t seed, Stream stream, std::uint64_t scenario,
                                   std::uint64_t item, std::uint64_t slot) {
  std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(stream)));
  h = mix64(h ^ scenario);
  h = mix64(h ^ item);
  return mix64(h ^ slot);
}

/// Uniform in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Key for an item identified by a string id (trip id, path id).
inline std::uint64_t id_key(std::string_view id) { return fnv1a64(id); }

/// Bernoulli(p) draw at a fixed coordinate of the counter-based stream.
inline bool bernoulli_at(std::uint64_t seed, Stream stream, std::uint64_t scenario, std::uint64_t item,
                         std::uint64_t slot, double p) {
  return to_unit(stream_key(seed, stream, scenario, item, slot)) < p;
}

/// Sequential generator with portable distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, Stream stream = Stream::generator)
      : engine_(mix64(seed ^ mix64(static_cast<std::uint64_t>(stream)))) {}

  std::uint64_t next() { return engine_(); }
  double uniform() { return to_unit(engine_()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }
  bool bernoulli(double p) { return uniform() < p; }
  double normal() {
    // Box-Muller; one variate per call keeps the stream position simple.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tnd
