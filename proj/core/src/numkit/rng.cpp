#include "bgfn/numkit/rng.hpp"

#include <sstream>

#include "bgfn/error.hpp"

namespace bgfn::numkit {

std::size_t sample_categorical(std::span<const double> probs, Rng& rng) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) {
      cumulative += probs[i];
      last_positive = i;
      if (u < cumulative) {
        return i;
      }
    }
  }
  // Rounding left u above the accumulated mass.
  return last_positive;
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 finalizer over a mixed key.
  std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (stream + 1) + 0xD1B54A32D192ED03ULL * index;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string save_rng_state(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

Rng load_rng_state(const std::string& state) {
  Rng rng;
  std::istringstream in(state);
  in >> rng;
  if (in.fail()) {
    throw ConfigError("malformed RNG state in checkpoint");
  }
  return rng;
}

}  // namespace bgfn::numkit
