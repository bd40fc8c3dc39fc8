#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <span>
#include <vector>

namespace bgfn::env {

/// Square lattice {-W..W}^2 with explicit time t in [0, T], T = 2W.
struct GridConfig {
  int half_width = 15;

  [[nodiscard]] int horizon() const { return 2 * half_width; }
  [[nodiscard]] int side() const { return 2 * half_width + 1; }
  [[nodiscard]] std::size_t terminal_count() const {
    return static_cast<std::size_t>(side()) * static_cast<std::size_t>(side());
  }
  void validate() const;
};

struct GridState {
  int x = 0;
  int y = 0;
  int t = 0;
  auto operator<=>(const GridState&) const = default;
};

struct GridPos {
  int x = 0;
  int y = 0;
  auto operator<=>(const GridPos&) const = default;
};

/// Action indices are fixed for checkpoint stability:
/// 0 right (1,0), 1 left (-1,0), 2 up (0,1), 3 down (0,-1), 4 stay (0,0).
inline constexpr int kGridActionCount = 5;
inline constexpr std::array<std::array<int, 2>, kGridActionCount> kGridDisplacement{
    {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {0, 0}}};

using GridMask = std::array<bool, kGridActionCount>;

[[nodiscard]] bool in_bounds(int x, int y, const GridConfig& cfg);
/// In bounds, 0 <= t <= T, and |x| + |y| <= t.
[[nodiscard]] bool is_valid(GridState s, const GridConfig& cfg);

/// Action a is allowed iff t < T and the next position is in bounds.
[[nodiscard]] GridMask forward_mask(GridState s, const GridConfig& cfg);
/// Undoing a is allowed iff t > 0, the predecessor is in bounds, and
/// |x - dx| + |y - dy| <= t - 1.
[[nodiscard]] GridMask backward_mask(GridState s, const GridConfig& cfg);

/// Throws EnvironmentLogicError when the mask forbids the action.
[[nodiscard]] GridState step_forward(GridState s, int action, const GridConfig& cfg);
[[nodiscard]] GridState step_backward(GridState s, int action, const GridConfig& cfg);

/// Width of encode_observation's output: 3 + 2 * n_freq.
[[nodiscard]] constexpr int observation_width(int n_freq) { return 3 + 2 * n_freq; }

/// [x/W, y/W, t/T, fourier_time_features(t/T, n_freq)].
void encode_observation(GridState s, const GridConfig& cfg, int n_freq, std::span<double> out);
[[nodiscard]] std::vector<double> encode_observation(GridState s, const GridConfig& cfg, int n_freq = 8);

/// Every (x, y) with |x|, |y| <= W, in row-major order of (x, y).
[[nodiscard]] std::vector<GridPos> enumerate_terminals(const GridConfig& cfg);
/// Position of p in enumerate_terminals(cfg).
[[nodiscard]] std::size_t terminal_index(GridPos p, const GridConfig& cfg);

}  // namespace bgfn::env
