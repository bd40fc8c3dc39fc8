#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "bgfn/env/grid_env.hpp"

namespace bgfn::rewards {

inline constexpr double kDefaultRewardFloor = 1e-6;

/// Radius is a fraction of the half-width W.
struct EightGaussiansParams {
  double radius_frac = 0.8;
  double sigma = 1.0;
};

struct RingsParams {
  std::vector<double> radii_frac{0.4, 0.8};
  double sigma = 1.0;
  std::vector<double> weights{1.0, 1.0};
};

struct MoonsParams {
  double radius_frac = 0.6;
  double offset_frac = 0.03;  // delta = offset_frac * R
  double gap_frac = 0.018;    // gap = gap_frac * R
  double sigma = 1.0;
  int anchors = 256;          // split evenly across the two arcs
};

enum class GridRewardFamily { kEightGaussians, kRings, kMoons };

[[nodiscard]] GridRewardFamily parse_grid_family(const std::string& name);
[[nodiscard]] std::string family_name(GridRewardFamily family);

double density_8g(double x, double y, int half_width, const EightGaussiansParams& p = {});
double density_rings(double x, double y, int half_width, const RingsParams& p = {});
double density_moons(double x, double y, int half_width, const MoonsParams& p = {});

/// Anchor centres for the two-moons density: anchors/2 on the upper arc
/// (angles 0..pi around (-delta, 0)) then anchors/2 on the lower arc
/// (angles pi..2pi around (+delta, -gap)), endpoints included.
std::vector<std::array<double, 2>> moons_anchors(int half_width, const MoonsParams& p = {});

/// log((1 - lambda) rho + lambda).
double grid_log_reward(double rho, double lambda = kDefaultRewardFloor);

struct GridRewardSpec {
  GridRewardFamily family = GridRewardFamily::kRings;
  double lambda = kDefaultRewardFloor;
  EightGaussiansParams eight_gaussians;
  RingsParams rings;
  MoonsParams moons;
};

/// Log-reward table over every terminal of a grid, immutable after construction.
class GridRewardField {
 public:
  static GridRewardField build(const env::GridConfig& cfg, const GridRewardSpec& spec);
  /// Arbitrary table in enumerate_terminals() order (used for residual experiments and tests).
  static GridRewardField from_log_rewards(const env::GridConfig& cfg, std::vector<double> log_rewards,
                                          std::string label = "custom");

  [[nodiscard]] double log_reward(env::GridPos p) const;
  [[nodiscard]] std::span<const double> log_rewards() const { return log_rewards_; }
  [[nodiscard]] const env::GridConfig& grid() const { return grid_; }
  [[nodiscard]] const std::string& label() const { return label_; }

  /// log sum_x R(x).
  [[nodiscard]] double log_partition() const;
  /// p*(x) = R(x) / sum R, in enumerate_terminals() order.
  [[nodiscard]] std::vector<double> target_distribution() const;

 private:
  env::GridConfig grid_;
  std::vector<double> log_rewards_;
  std::string label_;
};

}  // namespace bgfn::rewards
