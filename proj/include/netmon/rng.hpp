#pragma once

#include <cstdint>
#include <random>

namespace netmon {

/// SplitMix64 finalizer. Used to derive independent substream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for substream `index` of a run seeded with `seed`.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x9E3779B97F4A7C15ULL));
}

/// Portable random source: mt19937_64 (output fixed by the standard) driving
/// Boost.Random distributions (same code on every platform), so draws are
/// bit-identical across compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    return Rng(substream_seed(seed, index));
  }

  double uniform();
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double lognormal(double mu, double sigma);
  double gamma(double shape, double scale);
  std::int64_t poisson(double mean);
  // Gamma-Poisson mixture with the given mean and size (dispersion) r;
  // variance = mean + mean^2 / r.
  std::int64_t negative_binomial(double mean, double r);
  std::uint64_t below(std::uint64_t bound);  // uniform on [0, bound)

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace netmon
