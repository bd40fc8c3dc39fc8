#include "bgfn/numkit/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bgfn/error.hpp"

namespace bgfn::numkit {

void fourier_time_features(double u, int n_freq, std::span<double> out) {
  if (n_freq < 0 || out.size() != static_cast<std::size_t>(2 * n_freq)) {
    throw UsageError("fourier_time_features: output width must be 2*n_freq");
  }
  u = std::clamp(u, 0.0, 1.0);
  double freq = 1.0;
  for (int k = 0; k < n_freq; ++k) {
    const double angle = std::numbers::pi * freq * u;
    out[2 * k] = std::sin(angle);
    out[2 * k + 1] = std::cos(angle);
    freq *= 2.0;
  }
}

std::vector<double> fourier_time_features(double u, int n_freq) {
  std::vector<double> out(static_cast<std::size_t>(2 * std::max(n_freq, 0)));
  fourier_time_features(u, n_freq, out);
  return out;
}

void sinusoidal_position_encoding(int position, int dim, std::span<double> out) {
  if (dim <= 0 || dim % 2 != 0 || out.size() != static_cast<std::size_t>(dim)) {
    throw UsageError("sinusoidal_position_encoding: dim must be even and match output");
  }
  for (int i = 0; i < dim / 2; ++i) {
    const double rate = std::pow(10000.0, -2.0 * i / dim);
    out[2 * i] = std::sin(position * rate);
    out[2 * i + 1] = std::cos(position * rate);
  }
}

}  // namespace bgfn::numkit
