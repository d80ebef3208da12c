#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace glearn {

// Seeded generator with platform-independent draws. The standard
// distributions are implementation-defined, so uniform/normal/shuffle are
// derived here directly from mt19937_64 output to keep runs bit-reproducible
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller; the second variate is cached.
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes a base seed with a purpose tag and an optional counter so independent
// consumers (init, shuffling, noise) draw from unrelated streams.
std::uint64_t derive_seed(std::uint64_t base, std::string_view purpose, std::uint64_t counter = 0);

// 64-bit FNV-1a over raw bytes, rendered as 16 hex digits.
std::string fingerprint_bytes(std::string_view bytes);

}  // namespace glearn
