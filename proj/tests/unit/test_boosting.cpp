#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "bgfn/boosting/boosted_loss.hpp"
#include "bgfn/boosting/ensemble.hpp"
#include "bgfn/error.hpp"
#include "bgfn/gfn/tb.hpp"
#include "bgfn/oracle/oracle.hpp"
#include "bgfn/rewards/seq_rewards.hpp"
#include "support.hpp"

using namespace bgfn;
using namespace bgfn::boosting;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sq(double v) { return v * v; }

}  // namespace

TEST(ClampAlpha, Examples) {
  EXPECT_EQ(clamp_alpha(0.3, 1.0, 0.0, 1e-12).alpha, 0.3);
  EXPECT_FALSE(clamp_alpha(0.3, 1.0, 0.0, 1e-12).clamped);
  const auto c = clamp_alpha(0.0, 1.0, 2.0, 1e-12);
  EXPECT_TRUE(c.clamped);
  EXPECT_NEAR(c.alpha, 0.5, 1e-12);
  EXPECT_NEAR(1.0 - (1.0 - c.alpha) * 2.0, 1e-12, 1e-15);
  EXPECT_EQ(clamp_alpha(1.0, 0.2, 5.0, 1e-12).alpha, 1.0);
  const auto lg = clamp_alpha_log(0.0, 0.0, std::log(2.0), 1e-12);
  EXPECT_NEAR(lg.alpha, 0.5, 1e-12);
  EXPECT_TRUE(lg.clamped);
  // Reward already below delta: only alpha = 1 keeps the denominator positive.
  const auto floor = clamp_alpha_log(0.0, -30.0, -29.0, 1e-12);
  EXPECT_EQ(floor.alpha, 1.0);
}

TEST(ClampAlpha, DenominatorNeverBelowDelta) {
  numkit::Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const double r = std::exp(numkit::uniform01(rng) * 20 - 10);
    const double r_old = std::exp(numkit::uniform01(rng) * 20 - 10);
    const double alpha = numkit::uniform01(rng);
    const auto c = clamp_alpha(alpha, r, r_old, 1e-12);
    EXPECT_GE(c.alpha, alpha);
    // Linear-space check; cancellation costs a few ulps of the larger operand.
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::max(r, r_old);
    EXPECT_GE(r - (1.0 - c.alpha) * r_old, 1e-12 - slack);
  }
}

TEST(BoostedLoss, Examples) {
  EXPECT_NEAR(boosted_loss(std::log(2.0), std::log(4.0), -kInf, 1.0), sq(std::log(0.5)), 1e-15);
  EXPECT_NEAR(sq(std::log(0.5)), 0.4805, 1e-4);
  // R_old = R with alpha = 1: loss vanishes as the new flow vanishes.
  EXPECT_LT(boosted_loss(-40.0, std::log(3.0), std::log(3.0), 1.0), 1e-30);
  EXPECT_GT(boosted_loss(0.0, std::log(3.0), std::log(3.0), 1.0), 0.0);
  // Direct substitution with a live residual.
  const double rhat = 0.7, r = 2.0, r_old = 1.5, alpha = 0.4;
  EXPECT_NEAR(boosted_loss(std::log(rhat), std::log(r), std::log(r_old), alpha),
              sq(std::log((rhat + alpha * r_old) / (r - (1 - alpha) * r_old))), 1e-14);
}

TEST(BoostedLoss, EmptyResidualMatchesTrajectoryBalanceBitForBit) {
  for (double alpha : {0.0, 0.3, 1.0}) {
    for (double lr : {-2.0, 0.0, 3.5}) {
      numkit::ScalarTape a;
      const auto za = a.leaf(0.4);
      const auto la = gfn::log_rhat(a, za, a.leaf(lr), a.leaf(-1.1));
      const auto ta = gfn::tb_loss(a, la, -0.7);
      a.backward(ta);
      numkit::ScalarTape b;
      const auto zb = b.leaf(0.4);
      const auto lb = gfn::log_rhat(b, zb, b.leaf(lr), b.leaf(-1.1));
      BoostConfig cfg;
      cfg.alpha = alpha;
      LossBranch branch{};
      const auto tb = select_loss(b, lb, -0.7, -kInf, cfg, &branch);
      b.backward(tb);
      EXPECT_EQ(branch, LossBranch::kBoosted);
      EXPECT_EQ(a.value(ta), b.value(tb));
      EXPECT_EQ(a.adjoint(za), b.adjoint(zb));
    }
  }
}

TEST(NablaLoss, Examples) {
  EXPECT_EQ(nabla_loss(-kInf, 0.0, 0.5), 0.0);
  EXPECT_NEAR(nabla_loss(std::log(0.5 * 3.0), std::log(3.0), 0.5), sq(std::log(2.0)), 1e-15);
  double prev = -1.0;
  for (double lr = -10; lr < 10; lr += 0.5) {
    const double v = nabla_loss(lr, 0.0, 0.5);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(SelectLoss, Branches) {
  BoostConfig cfg;
  cfg.alpha = 1.0;
  EXPECT_EQ(choose_loss(0.0, std::log(50.0), cfg).branch, LossBranch::kBoosted);
  EXPECT_EQ(choose_loss(0.0, std::log(50.0), cfg).log_denominator, 0.0);
  cfg.alpha = 0.0;
  const auto clamped = choose_loss(0.0, std::log(2.0), cfg);
  EXPECT_EQ(clamped.branch, LossBranch::kClamped);
  EXPECT_NEAR(clamped.alpha, 0.5, 1e-12);
  EXPECT_NEAR(clamped.log_denominator, std::log(1e-12), 1e-9);
  EXPECT_EQ(choose_loss(0.0, std::log(0.5), cfg).branch, LossBranch::kBoosted);
  cfg.alpha = 0.5;
  EXPECT_EQ(choose_loss(0.0, std::log(3.0), cfg).branch, LossBranch::kNabla);
  EXPECT_EQ(choose_loss(0.0, std::log(1.5), cfg).branch, LossBranch::kBoosted);

  numkit::ScalarTape tape;
  const auto lrh = tape.leaf(std::log(0.25));
  LossBranch taken{};
  const auto v = select_loss(tape, lrh, 0.0, std::log(3.0), cfg, &taken);
  EXPECT_EQ(taken, LossBranch::kNabla);
  EXPECT_NEAR(tape.value(v), nabla_loss(std::log(0.25), 0.0, 0.5), 1e-15);
  EXPECT_THROW((void)[] {
    BoostConfig bad;
    bad.alpha = 1.5;
    bad.validate();
  }(), ConfigError);
}

TEST(Residual, EmptyOneAndTwoMembers) {
  const gfn::SeqPolicy policy(env::SeqConfig{20, 4, 4}, gfn::SeqArch{8, 4, 16});
  const std::vector<std::vector<int>> xs{{1, 2}, {5}, {3, 3, 3, 3}};
  numkit::Rng rng(1);
  const auto before = rng;
  const auto empty = estimate_residual<gfn::SeqPolicy>({}, policy, xs, 1, rng);
  EXPECT_EQ(rng, before);
  for (const auto& e : empty) {
    EXPECT_EQ(e.log_r_old, -kInf);
  }
  gfn::Stage member{policy.init_params(3)};
  member.params.set_scalar("logZ", 0.7);
  const gfn::Stage* one[] = {&member};
  const auto single = estimate_residual<gfn::SeqPolicy>(one, policy, xs, 1, rng);
  const auto direct = estimate_member_reward(member, policy, std::span<const std::vector<int>>(xs), 5, rng);
  const gfn::Stage* two[] = {&member, &member};
  const auto pair = estimate_residual<gfn::SeqPolicy>(two, policy, xs, 1, rng);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_EQ(single[i].log_r_old, direct[i]);
    EXPECT_NEAR(pair[i].log_r_old, direct[i] + std::log(2.0), 1e-12);
  }
}

TEST(Residual, GridMemberEstimateIsUnbiased) {
  const gfn::GridPolicy policy(env::GridConfig{2}, testsupport::small_grid_arch());
  gfn::Stage member{policy.init_params(21)};
  member.params.set_scalar("logZ", 0.4);
  const auto exact = oracle::exact_flows(policy, member.params);
  const auto terminals = env::enumerate_terminals(policy.grid());
  numkit::Rng rng(12);
  for (std::size_t idx : {std::size_t{6}, std::size_t{12}, std::size_t{18}}) {
    const std::vector<env::GridPos> xs(10000, terminals[idx]);
    const auto logs = estimate_member_reward(member, policy, std::span<const env::GridPos>(xs), 1, rng);
    double mean = 0.0;
    for (double l : logs) {
      mean += std::exp(l) / logs.size();
    }
    double var = 0.0;
    for (double l : logs) {
      var += sq(std::exp(l) - mean) / (logs.size() - 1);
    }
    const double se = std::sqrt(var / logs.size());
    EXPECT_LT(std::abs(mean - exact[idx]), 3.0 * se + 1e-12) << "terminal " << idx;
  }
}

TEST(Ensemble, SpawnLifecycle) {
  const gfn::GridPolicy policy(env::GridConfig{2}, testsupport::small_grid_arch());
  const auto field = testsupport::rings_field(2);
  const auto baseline = policy.init_params(77);
  Ensemble ensemble(gfn::Stage{baseline}, BoostConfig{});
  numkit::Rng rng(3);
  const auto settings = testsupport::grid_settings(16);
  for (int i = 0; i < 5; ++i) {
    (void)boosted_train_step(ensemble, policy, field, settings, rng);
  }
  freeze_and_spawn(ensemble, policy, 77);
  EXPECT_EQ(ensemble.frozen().size(), 1u);
  EXPECT_TRUE(ensemble.frozen()[0].frozen);
  EXPECT_EQ(ensemble.active().id, 2);
  EXPECT_TRUE(ensemble.active().params.values_equal(baseline));
  const auto first_hash = ensemble.frozen()[0].params.fingerprint();
  for (int i = 0; i < 5; ++i) {
    (void)boosted_train_step(ensemble, policy, field, settings, rng);
  }
  freeze_and_spawn(ensemble, policy, 77);
  EXPECT_EQ(ensemble.frozen().size(), 2u);
  EXPECT_EQ(ensemble.stage_count(), 3u);
  const auto second_hash = ensemble.frozen()[1].params.fingerprint();
  for (int i = 0; i < 5; ++i) {
    const auto stats = boosted_train_step(ensemble, policy, field, settings, rng);
    EXPECT_EQ(stats.boosted + stats.nabla + stats.clamped, 16u);
  }
  EXPECT_EQ(ensemble.frozen()[0].params.fingerprint(), first_hash);
  EXPECT_EQ(ensemble.frozen()[1].params.fingerprint(), second_hash);
  EXPECT_FALSE(ensemble.active().params.values_equal(baseline));
}

TEST(Ensemble, EmptyEnsembleBoostedEqualsTrajectoryBalance) {
  const gfn::GridPolicy policy(env::GridConfig{2}, testsupport::small_grid_arch());
  const auto field = testsupport::rings_field(2);
  const auto settings = testsupport::grid_settings(32);
  gfn::Stage plain{policy.init_params(5)};
  Ensemble ensemble(gfn::Stage{policy.init_params(5)}, BoostConfig{0.3});
  numkit::Rng ra(9);
  numkit::Rng rb(9);
  for (int i = 0; i < 25; ++i) {
    const double la = gfn::train_step(plain, policy, field, settings, ra).mean_loss;
    const double lb = boosted_train_step(ensemble, policy, field, settings, rb).mean_loss;
    ASSERT_EQ(la, lb) << "step " << i;
    ASSERT_TRUE(plain.params.values_equal(ensemble.active().params)) << "step " << i;
  }
}

TEST(Ensemble, StageSelectionFollowsPartitionFunctions) {
  const gfn::GridPolicy policy(env::GridConfig{1}, testsupport::small_grid_arch());
  gfn::Stage first{policy.init_params(1)};
  first.params.set_scalar("logZ", std::log(2.0));
  Ensemble ensemble(std::move(first), BoostConfig{});
  ensemble.freeze_and_spawn(policy.init_params(2));
  ensemble.active().params.set_scalar("logZ", std::log(6.0));
  const auto w = stage_weights(ensemble);
  EXPECT_NEAR(w[0], 0.25, 1e-15);
  EXPECT_NEAR(w[1], 0.75, 1e-15);
  numkit::Rng rng(17);
  const std::size_t n = 100000;
  const auto samples = ensemble_sample(ensemble, policy, rng, n);
  ASSERT_EQ(samples.size(), n);
  const auto second = std::count_if(samples.begin(), samples.end(), [](const auto& s) { return s.stage == 2; });
  const double sd = std::sqrt(n * 0.75 * 0.25);
  EXPECT_LT(std::abs(static_cast<double>(second) - 0.75 * n), 3.0 * sd);

  ensemble.active().params.set_scalar("logZ", std::numeric_limits<double>::quiet_NaN());
  EXPECT_THROW((void)stage_weights(ensemble), NumericError);
}

TEST(Ensemble, SingleStageSamplingMatchesPlainRollouts) {
  const gfn::GridPolicy policy(env::GridConfig{2}, testsupport::small_grid_arch());
  Ensemble ensemble(gfn::Stage{policy.init_params(8)}, BoostConfig{});
  numkit::Rng a(4);
  numkit::Rng b(4);
  const auto samples = ensemble_sample(ensemble, policy, a, 50);
  b.discard(50);  // one stage pick per sample
  const auto plain = policy.sample_forward(ensemble.active().params, 50, 0.0, b);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(samples[i].terminal, gfn::GridPolicy::terminal_of(plain.records[i]));
    EXPECT_EQ(samples[i].stage, 1);
  }
}

TEST(Ensemble, InjectedResidualIsUsed) {
  const gfn::SeqPolicy policy(env::SeqConfig{20, 3, 3}, gfn::SeqArch{8, 4, 16});
  const rewards::SeqReward reward(std::make_shared<rewards::SyntheticScorer>(), rewards::SeqRewardConfig{});
  Ensemble ensemble(gfn::Stage{policy.init_params(1)}, BoostConfig{0.0});
  numkit::Rng rng(2);
  RoldProvider<gfn::SeqPolicy> provider = [&](std::span<const std::vector<int>> xs, numkit::Rng&) {
    std::vector<double> out;
    for (const auto& x : xs) {
      out.push_back(reward.log_reward(x) + std::log(2.0));  // R_old = 2R forces the safeguard
    }
    return out;
  };
  const auto stats = boosted_train_step(ensemble, policy, reward, testsupport::seq_settings(32), rng, provider);
  EXPECT_EQ(stats.clamped, 32u);
  RoldProvider<gfn::SeqPolicy> wrong = [](std::span<const std::vector<int>>, numkit::Rng&) {
    return std::vector<double>(1, 0.0);
  };
  EXPECT_THROW((void)boosted_train_step(ensemble, policy, reward, testsupport::seq_settings(32), rng, wrong),
               UsageError);
}
