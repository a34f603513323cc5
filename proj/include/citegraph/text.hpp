#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace citegraph {

/// Splits on ASCII non-alphanumerics and lowercases ASCII letters. Bytes >= 0x80
/// are kept as token characters so UTF-8 words survive intact. Shared by the
/// hashing embedder and BM25 so both see identical terms.
std::vector<std::string> tokenize(std::string_view text);

/// 64-bit FNV-1a with the seed folded into the offset basis. Stable across
/// platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0);

// Platform-independent draws from mt19937_64. The std distributions are
// implementation-defined, so seeded runs would differ between standard libraries.
using Rng = std::mt19937_64;

/// Uniform in [0, 1) with 53 bits of precision.
double uniform_unit(Rng& rng);

/// Uniform integer in [0, n) by rejection sampling. n must be > 0.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

/// Fisher-Yates shuffle driven by uniform_index.
template <typename T>
void stable_shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

/// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

/// Fixed-point with the given number of decimals ("0.500000").
std::string format_fixed(double value, int decimals);

}  // namespace citegraph
