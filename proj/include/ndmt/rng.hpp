#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ndmt {

// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t mix64(std::uint64_t x);

// FNV-1a over bytes, then mixed. Stable across platforms and builds.
std::uint64_t hash_string(std::string_view s);

// Derives a child seed from a parent seed and a label. Children with distinct
// labels are statistically independent streams.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

// Portable random source. std::mt19937_64 produces a fixed sequence on every
// implementation; the standard distributions do not, so the bounded and real
// draws are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  // Uniform real in [0, 1).
  double uniform();

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ndmt
