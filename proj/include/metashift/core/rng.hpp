#pragma once

#include <cstdint>
#include <cstddef>

namespace metashift {

// Counter-based pseudo-random generator with explicit stream splitting.
//
// Output i of a stream with key K is fin(K + (i+1) * GAMMA), where fin is
// the splitmix64 output permutation and GAMMA = 0x9E3779B97F4A7C15. Keys are
// derived by hashing (master_seed, stream_id) through the same permutation,
// so (seed, stream) pins every draw of a run. All samplers below are written
// against next_u64() only; no std::random distributions are used, keeping
// byte-level reproducibility a property of this file rather than of the
// standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  // Independent stream derived from this one's key and a child id.
  // Splitting does not advance this generator.
  Rng split(std::uint64_t child) const;

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  // Uniform on {0, ..., n-1}; unbiased via rejection. n must be > 0.
  std::size_t uniform_index(std::size_t n);

  // Standard normal via Box-Muller (two uniforms per draw, no caching).
  double normal();

  // Exponential with the given rate (mean 1/rate).
  double exponential(double rate);

  // Gamma(shape, 1) via Marsaglia-Tsang; shape > 0.
  double gamma(double shape);

  // Beta(a, b) from two gamma draws; a, b > 0.
  double beta(double a, double b);

 private:
  Rng() = default;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace metashift
