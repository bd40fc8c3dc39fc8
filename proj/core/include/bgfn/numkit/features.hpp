#pragma once

#include <span>
#include <vector>

namespace bgfn::numkit {

/// Geometric Fourier features of a normalized time u in [0,1]:
/// [sin(pi 2^k u), cos(pi 2^k u)] for k = 0..n_freq-1, interleaved per k.
/// u is clamped into [0,1].
std::vector<double> fourier_time_features(double u, int n_freq);

/// Same as above, written into out (size 2*n_freq).
void fourier_time_features(double u, int n_freq, std::span<double> out);

/// Transformer-style sinusoidal encoding of an integer position:
/// [sin(t w_i), cos(t w_i)] with w_i = 10000^(-2i/dim), i = 0..dim/2-1.
void sinusoidal_position_encoding(int position, int dim, std::span<double> out);

}  // namespace bgfn::numkit
