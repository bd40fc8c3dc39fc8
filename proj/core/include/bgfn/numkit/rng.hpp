#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace bgfn::numkit {

using Rng = std::mt19937_64;

/// Uniform double in [0,1) built from the top 53 bits; identical across
/// standard libraries, unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Index drawn from a probability vector that sums to one (up to rounding).
std::size_t sample_categorical(std::span<const double> probs, Rng& rng);

/// Deterministic child seed from a root seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index = 0);

std::string save_rng_state(const Rng& rng);
Rng load_rng_state(const std::string& state);

}  // namespace bgfn::numkit
