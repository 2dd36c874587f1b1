#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace emprobe {

// Seeded generator with platform-independent draws. std::mt19937_64 output is
// fixed by the standard; the distributions below are written out by hand
// because the std:: distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer on [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound);

  // Standard normal via Box-Muller; both variates of a pair are used.
  double normal();

  // Fisher-Yates, swapping from the back.
  template <typename T>
  void shuffle(std::vector<T>& items) {
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

std::uint64_t splitmix64(std::uint64_t x);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

// Child seed for a named sub-stream, e.g. derive_seed(seed, "anger").
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace emprobe
