#include "bgfn/rewards/grid_rewards.hpp"

#include <cmath>
#include <numbers>

#include "bgfn/error.hpp"
#include "bgfn/numkit/logspace.hpp"

namespace bgfn::rewards {

GridRewardFamily parse_grid_family(const std::string& name) {
  if (name == "8g") return GridRewardFamily::kEightGaussians;
  if (name == "rings") return GridRewardFamily::kRings;
  if (name == "moons") return GridRewardFamily::kMoons;
  throw ConfigError("unknown grid reward family '" + name + "' (expected 8g, rings or moons)");
}

std::string family_name(GridRewardFamily family) {
  switch (family) {
    case GridRewardFamily::kEightGaussians: return "8g";
    case GridRewardFamily::kRings: return "rings";
    case GridRewardFamily::kMoons: return "moons";
  }
  return "?";
}

double density_8g(double x, double y, int half_width, const EightGaussiansParams& p) {
  const double radius = p.radius_frac * half_width;
  const double inv = 1.0 / (2.0 * p.sigma * p.sigma);
  double rho = 0.0;
  for (int m = 0; m < 8; ++m) {
    const double theta = 2.0 * std::numbers::pi * m / 8.0;
    const double dx = x - radius * std::cos(theta);
    const double dy = y - radius * std::sin(theta);
    rho += std::exp(-(dx * dx + dy * dy) * inv);
  }
  return rho;
}

double density_rings(double x, double y, int half_width, const RingsParams& p) {
  if (p.radii_frac.size() != p.weights.size()) {
    throw ConfigError("rings: radii and weights must have the same length");
  }
  const double r = std::hypot(x, y);
  const double inv = 1.0 / (2.0 * p.sigma * p.sigma);
  double rho = 0.0;
  for (std::size_t l = 0; l < p.radii_frac.size(); ++l) {
    const double d = r - p.radii_frac[l] * half_width;
    rho += p.weights[l] * std::exp(-d * d * inv);
  }
  return rho;
}

std::vector<std::array<double, 2>> moons_anchors(int half_width, const MoonsParams& p) {
  if (p.anchors < 4 || p.anchors % 2 != 0) {
    throw ConfigError("moons: anchor count must be even and >= 4");
  }
  const double radius = p.radius_frac * half_width;
  const double delta = p.offset_frac * radius;
  const double gap = p.gap_frac * radius;
  const int per_arc = p.anchors / 2;
  std::vector<std::array<double, 2>> anchors;
  anchors.reserve(static_cast<std::size_t>(p.anchors));
  for (int m = 0; m < per_arc; ++m) {
    const double theta = std::numbers::pi * m / (per_arc - 1);
    anchors.push_back({-delta + radius * std::cos(theta), radius * std::sin(theta)});
  }
  for (int m = 0; m < per_arc; ++m) {
    const double theta = std::numbers::pi + std::numbers::pi * m / (per_arc - 1);
    anchors.push_back({delta + radius * std::cos(theta), -gap + radius * std::sin(theta)});
  }
  return anchors;
}

double density_moons(double x, double y, int half_width, const MoonsParams& p) {
  const double inv = 1.0 / (2.0 * p.sigma * p.sigma);
  double rho = 0.0;
  for (const auto& a : moons_anchors(half_width, p)) {
    const double dx = x - a[0];
    const double dy = y - a[1];
    rho += std::exp(-(dx * dx + dy * dy) * inv);
  }
  return rho;
}

double grid_log_reward(double rho, double lambda) {
  if (rho < 0.0) {
    throw DomainError("grid_log_reward: density must be >= 0");
  }
  return std::log((1.0 - lambda) * rho + lambda);
}

GridRewardField GridRewardField::build(const env::GridConfig& cfg, const GridRewardSpec& spec) {
  cfg.validate();
  if (!(spec.lambda > 0.0 && spec.lambda < 1.0)) {
    throw ConfigError("reward lambda must lie in (0,1)");
  }
  std::vector<double> table;
  table.reserve(cfg.terminal_count());
  const auto moons = spec.family == GridRewardFamily::kMoons
                         ? moons_anchors(cfg.half_width, spec.moons)
                         : std::vector<std::array<double, 2>>{};
  for (const auto& pos : env::enumerate_terminals(cfg)) {
    double rho = 0.0;
    switch (spec.family) {
      case GridRewardFamily::kEightGaussians:
        rho = density_8g(pos.x, pos.y, cfg.half_width, spec.eight_gaussians);
        break;
      case GridRewardFamily::kRings:
        rho = density_rings(pos.x, pos.y, cfg.half_width, spec.rings);
        break;
      case GridRewardFamily::kMoons: {
        const double inv = 1.0 / (2.0 * spec.moons.sigma * spec.moons.sigma);
        for (const auto& a : moons) {
          const double dx = pos.x - a[0];
          const double dy = pos.y - a[1];
          rho += std::exp(-(dx * dx + dy * dy) * inv);
        }
        break;
      }
    }
    table.push_back(grid_log_reward(rho, spec.lambda));
  }
  return from_log_rewards(cfg, std::move(table), family_name(spec.family));
}

GridRewardField GridRewardField::from_log_rewards(const env::GridConfig& cfg,
                                                  std::vector<double> log_rewards,
                                                  std::string label) {
  cfg.validate();
  if (log_rewards.size() != cfg.terminal_count()) {
    throw ConfigError("reward table size " + std::to_string(log_rewards.size()) +
                      " does not cover the " + std::to_string(cfg.terminal_count()) + " terminals");
  }
  for (double v : log_rewards) {
    if (!std::isfinite(v)) {
      throw ConfigError("reward table contains a non-finite log-reward");
    }
  }
  GridRewardField field;
  field.grid_ = cfg;
  field.log_rewards_ = std::move(log_rewards);
  field.label_ = std::move(label);
  return field;
}

double GridRewardField::log_reward(env::GridPos p) const {
  return log_rewards_[env::terminal_index(p, grid_)];
}

double GridRewardField::log_partition() const { return numkit::log_sum_exp(log_rewards_); }

std::vector<double> GridRewardField::target_distribution() const {
  const double log_z = log_partition();
  std::vector<double> p(log_rewards_.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(log_rewards_[i] - log_z);
  }
  return p;
}

}  // namespace bgfn::rewards
