#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>

#include "bgfn/env/seq_env.hpp"
#include "bgfn/error.hpp"
#include "bgfn/rewards/external_scorer.hpp"
#include "bgfn/rewards/grid_rewards.hpp"
#include "bgfn/rewards/seq_rewards.hpp"

using namespace bgfn;
using namespace bgfn::rewards;

namespace {

// Direct eight-term sum, written out without the library's anchor helper.
double eight_gaussians_reference(double x, double y, double radius, double sigma) {
  double total = 0.0;
  for (int m = 0; m < 8; ++m) {
    const double theta = 2.0 * std::numbers::pi * m / 8.0;
    const double dx = x - radius * std::cos(theta);
    const double dy = y - radius * std::sin(theta);
    total += std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
  }
  return total;
}

}  // namespace

TEST(GridRewards, EightGaussians) {
  EXPECT_NEAR(density_8g(12, 0, 15), 1.0, 1e-15);
  EXPECT_NEAR(density_8g(12, 0, 15), eight_gaussians_reference(12, 0, 12, 1), 1e-15);
  EXPECT_LT(density_8g(0, 0, 15), 8 * std::exp(-72.0) * (1 + 1e-12));
  EXPECT_NEAR(density_8g(0, 0, 15), eight_gaussians_reference(0, 0, 12, 1), 1e-40);
  EXPECT_NEAR(density_8g(3, -5, 15), eight_gaussians_reference(3, -5, 12, 1), 1e-14);
  // Every anchor carries the same value.
  const double at0 = density_8g(12, 0, 15);
  for (int m = 1; m < 8; ++m) {
    const double theta = 2.0 * std::numbers::pi * m / 8.0;
    EXPECT_NEAR(density_8g(12 * std::cos(theta), 12 * std::sin(theta), 15), at0, 1e-12);
  }
}

TEST(GridRewards, Rings) {
  EXPECT_NEAR(density_rings(6, 0, 15), 1.0 + std::exp(-18.0), 1e-15);
  EXPECT_NEAR(density_rings(0, 0, 15), std::exp(-18.0) + std::exp(-72.0), 1e-20);
  const double r = 5.0;
  EXPECT_NEAR(density_rings(r, 0, 15), density_rings(3, 4, 15), 1e-15);
  EXPECT_NEAR(density_rings(0, -r, 15), density_rings(-4, 3, 15), 1e-15);
}

TEST(GridRewards, Moons) {
  const MoonsParams p;
  const auto anchors = moons_anchors(15, p);
  ASSERT_EQ(anchors.size(), 256u);
  EXPECT_GE(density_moons(anchors[10][0], anchors[10][1], 15), 1.0);
  EXPECT_GE(density_moons(anchors[200][0], anchors[200][1], 15), 1.0);
  // Direct 256-term sum at the corner.
  double corner = 0.0;
  for (const auto& a : anchors) {
    const double dx = 15 - a[0];
    const double dy = 15 - a[1];
    corner += std::exp(-(dx * dx + dy * dy) / 2.0);
  }
  EXPECT_LT(corner, 1e-10);
  EXPECT_NEAR(density_moons(15, 15, 15), corner, 1e-25);
  // Upper arc centred at (-delta, 0), lower arc at (+delta, -gap).
  const double radius = 0.6 * 15;
  const double delta = 0.03 * radius;
  const double gap = 0.018 * radius;
  for (std::size_t i = 0; i < 128; ++i) {
    EXPECT_NEAR(std::hypot(anchors[i][0] + delta, anchors[i][1]), radius, 1e-12);
    EXPECT_GE(anchors[i][1], -1e-12);
    EXPECT_NEAR(std::hypot(anchors[128 + i][0] - delta, anchors[128 + i][1] + gap), radius, 1e-12);
    EXPECT_LE(anchors[128 + i][1], -gap + 1e-12);
  }
}

TEST(GridRewards, LogRewardSmoothing) {
  EXPECT_DOUBLE_EQ(grid_log_reward(0.0), std::log(1e-6));
  EXPECT_EQ(grid_log_reward(1.0), 0.0);
  EXPECT_NEAR(grid_log_reward(2.0), std::log(2.0 * (1 - 1e-6) + 1e-6), 1e-15);
}

TEST(GridRewards, FieldsFiniteAndNormalized) {
  for (int w : {2, 7, 15}) {
    for (auto family : {GridRewardFamily::kEightGaussians, GridRewardFamily::kRings, GridRewardFamily::kMoons}) {
      GridRewardSpec spec;
      spec.family = family;
      const auto field = GridRewardField::build(env::GridConfig{w}, spec);
      ASSERT_EQ(field.log_rewards().size(), env::GridConfig{w}.terminal_count());
      for (double v : field.log_rewards()) {
        EXPECT_TRUE(std::isfinite(v));
        EXPECT_GE(v, std::log(1e-6) - 1e-12);
      }
      const auto target = field.target_distribution();
      EXPECT_NEAR(std::accumulate(target.begin(), target.end(), 0.0), 1.0, 1e-12);
    }
  }
  EXPECT_EQ(parse_grid_family("8g"), GridRewardFamily::kEightGaussians);
  EXPECT_THROW((void)parse_grid_family("spiral"), ConfigError);
}

TEST(SeqRewards, LogitMargin) {
  EXPECT_EQ(seq_log_reward(0.97, 5), 0.0);
  EXPECT_EQ(seq_log_reward(0.94, 5), 0.0);
  EXPECT_EQ(seq_log_reward(0.5, 5), -30.0);
  const double margin = std::log(0.9 / 0.1) - std::log(0.94 / 0.06);
  EXPECT_NEAR(seq_log_reward(0.9, 2), 2 / 0.3 * margin, 1e-12);
  EXPECT_EQ(seq_log_reward(0.99, 0), -30.0);
  EXPECT_THROW((void)seq_log_reward(0.0, 3), DomainError);
  EXPECT_THROW((void)seq_log_reward(1.0, 3), DomainError);
  double prev = -1e9;
  for (double p = 0.01; p < 1.0; p += 0.01) {
    const double v = seq_log_reward(p, 4);
    EXPECT_LE(v, 0.0);
    EXPECT_GE(v, prev);
    EXPECT_EQ(v == 0.0, p >= 0.94);
    prev = v;
  }
}

TEST(SeqRewards, SyntheticScorer) {
  const SyntheticScorer scorer;
  const auto motif = scorer.motifs().front();
  std::vector<int> seq{1, 2};
  seq.insert(seq.end(), motif.begin(), motif.end());
  seq.push_back(4);
  EXPECT_GE(scorer.score(seq), 0.95);
  EXPECT_LE(scorer.score(env::string_to_tokens("A")), 0.5);
  EXPECT_EQ(scorer.score(seq), scorer.score(seq));
  EXPECT_EQ(best_motif_matches(env::string_to_tokens("WAK"), env::string_to_tokens("KLW")), 1);
  EXPECT_EQ(best_motif_matches(env::string_to_tokens("LW"), env::string_to_tokens("KLW")), 2);
  EXPECT_THROW(SyntheticScorer(SyntheticScorer::Options{}), ConfigError);
}

TEST(SeqRewards, MemoizedRewardAndEmptySequence) {
  const SeqReward reward(std::make_shared<SyntheticScorer>(), SeqRewardConfig{});
  const auto motif = SyntheticScorer::default_motifs().front();
  EXPECT_EQ(reward.log_reward(motif), 0.0);
  EXPECT_EQ(reward.log_reward(std::vector<int>{}), -30.0);
  const auto weak = env::string_to_tokens("AAAAA");
  EXPECT_EQ(reward.log_reward(weak), seq_log_reward(reward.scorer().score(weak), 5));
}

TEST(SeqRewards, ExternalProcessScorer) {
  const ExternalProcessScorer scorer("while read line; do echo 0.25; done");
  EXPECT_EQ(scorer.score(env::string_to_tokens("KLW")), 0.25);
  EXPECT_EQ(scorer.score(env::string_to_tokens("AD")), 0.25);
  const ExternalProcessScorer bad("while read line; do echo nope; done");
  EXPECT_ANY_THROW((void)bad.score(env::string_to_tokens("A")));
}
