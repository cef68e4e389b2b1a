#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace lgaze {

using Rng = std::mt19937_64;

// Derives an independent child seed from a root seed and a stream id
// (SplitMix64 finalizer over the combined words).
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) noexcept;
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) noexcept;

// Uniform double in [lo, hi).
double uniform(Rng& rng, double lo, double hi);
double gaussian(Rng& rng, double mean, double stddev);

// Unbiased integer in [0, n); n > 0.
std::size_t uniform_index(Rng& rng, std::size_t n);

// Fisher-Yates; reproducible across standard library implementations.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::size_t>(last - first);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::iter_swap(first + (i - 1), first + j);
  }
}

}  // namespace lgaze
