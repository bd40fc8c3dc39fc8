#include "bgfn/env/grid_env.hpp"

#include <cstdlib>
#include <string>

#include "bgfn/error.hpp"
#include "bgfn/numkit/features.hpp"

namespace bgfn::env {

void GridConfig::validate() const {
  if (half_width < 1) {
    throw ConfigError("grid half_width must be >= 1, got " + std::to_string(half_width));
  }
}

bool in_bounds(int x, int y, const GridConfig& cfg) {
  return std::abs(x) <= cfg.half_width && std::abs(y) <= cfg.half_width;
}

bool is_valid(GridState s, const GridConfig& cfg) {
  return in_bounds(s.x, s.y, cfg) && s.t >= 0 && s.t <= cfg.horizon() &&
         std::abs(s.x) + std::abs(s.y) <= s.t;
}

GridMask forward_mask(GridState s, const GridConfig& cfg) {
  GridMask mask{};
  if (s.t >= cfg.horizon()) {
    return mask;
  }
  for (int a = 0; a < kGridActionCount; ++a) {
    mask[a] = in_bounds(s.x + kGridDisplacement[a][0], s.y + kGridDisplacement[a][1], cfg);
  }
  return mask;
}

GridMask backward_mask(GridState s, const GridConfig& cfg) {
  GridMask mask{};
  if (s.t <= 0) {
    return mask;
  }
  for (int a = 0; a < kGridActionCount; ++a) {
    const int px = s.x - kGridDisplacement[a][0];
    const int py = s.y - kGridDisplacement[a][1];
    mask[a] = in_bounds(px, py, cfg) && std::abs(px) + std::abs(py) <= s.t - 1;
  }
  return mask;
}

namespace {

void check_action(int action) {
  if (action < 0 || action >= kGridActionCount) {
    throw EnvironmentLogicError("grid action index out of range: " + std::to_string(action));
  }
}

}  // namespace

GridState step_forward(GridState s, int action, const GridConfig& cfg) {
  check_action(action);
  if (!forward_mask(s, cfg)[action]) {
    throw EnvironmentLogicError("forward action " + std::to_string(action) + " masked at (" +
                                std::to_string(s.x) + "," + std::to_string(s.y) + "," +
                                std::to_string(s.t) + ")");
  }
  return {s.x + kGridDisplacement[action][0], s.y + kGridDisplacement[action][1], s.t + 1};
}

GridState step_backward(GridState s, int action, const GridConfig& cfg) {
  check_action(action);
  if (!backward_mask(s, cfg)[action]) {
    throw EnvironmentLogicError("backward action " + std::to_string(action) + " masked at (" +
                                std::to_string(s.x) + "," + std::to_string(s.y) + "," +
                                std::to_string(s.t) + ")");
  }
  return {s.x - kGridDisplacement[action][0], s.y - kGridDisplacement[action][1], s.t - 1};
}

void encode_observation(GridState s, const GridConfig& cfg, int n_freq, std::span<double> out) {
  if (out.size() != static_cast<std::size_t>(observation_width(n_freq))) {
    throw UsageError("encode_observation: output width mismatch");
  }
  const double w = cfg.half_width;
  const double u = static_cast<double>(s.t) / cfg.horizon();
  out[0] = s.x / w;
  out[1] = s.y / w;
  out[2] = u;
  numkit::fourier_time_features(u, n_freq, out.subspan(3));
}

std::vector<double> encode_observation(GridState s, const GridConfig& cfg, int n_freq) {
  std::vector<double> out(static_cast<std::size_t>(observation_width(n_freq)));
  encode_observation(s, cfg, n_freq, out);
  return out;
}

std::vector<GridPos> enumerate_terminals(const GridConfig& cfg) {
  std::vector<GridPos> out;
  out.reserve(cfg.terminal_count());
  for (int x = -cfg.half_width; x <= cfg.half_width; ++x) {
    for (int y = -cfg.half_width; y <= cfg.half_width; ++y) {
      out.push_back({x, y});
    }
  }
  return out;
}

std::size_t terminal_index(GridPos p, const GridConfig& cfg) {
  if (!in_bounds(p.x, p.y, cfg)) {
    throw UsageError("terminal out of bounds");
  }
  return static_cast<std::size_t>(p.x + cfg.half_width) * static_cast<std::size_t>(cfg.side()) +
         static_cast<std::size_t>(p.y + cfg.half_width);
}

}  // namespace bgfn::env
