#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "bgfn/env/grid_env.hpp"
#include "bgfn/env/seq_env.hpp"
#include "bgfn/error.hpp"
#include "bgfn/gfn/grid_policy.hpp"
#include "bgfn/gfn/policy_common.hpp"
#include "bgfn/gfn/seq_policy.hpp"
#include "bgfn/gfn/tb.hpp"
#include "bgfn/gfn/train.hpp"
#include "bgfn/rewards/seq_rewards.hpp"
#include "support.hpp"

using namespace bgfn;
using gfn::GridPolicy;
using gfn::SeqPolicy;
using numkit::Matrix;

TEST(MaskedSoftmaxRows, Examples) {
  Matrix logits = Matrix::Zero(3, 5);
  logits.row(2) << 5.0, -3.0, 40.0, 0.1, 7.0;
  const bool masks[15] = {true, true, true,  true,  true,  false, true, false,
                          true, false, false, false, false, true, false};
  Matrix probs;
  (void)gfn::masked_softmax_rows(logits, masks, probs);
  for (int a = 0; a < 5; ++a) {
    EXPECT_NEAR(probs(0, a), 0.2, 1e-15);
  }
  EXPECT_NEAR(probs(1, 1), 0.5, 1e-15);
  EXPECT_NEAR(probs(1, 3), 0.5, 1e-15);
  EXPECT_LT(probs(1, 0), 1e-300);
  EXPECT_NEAR(probs.row(1).sum(), 1.0, 1e-12);
  EXPECT_EQ(probs(2, 3), 1.0);
  const bool none[5] = {false, false, false, false, false};
  EXPECT_THROW((void)gfn::masked_softmax_rows(Matrix::Zero(1, 5), none, probs), EnvironmentLogicError);
}

TEST(GridPolicy, ZeroWeightsGiveUniformOverValid) {
  const GridPolicy policy(env::GridConfig{2}, testsupport::small_grid_arch());
  auto params = policy.init_params(1);
  testsupport::zero_params(params, "pf.");
  const auto p0 = policy.forward_probs(params, {0, 0, 0});
  for (double p : p0) {
    EXPECT_NEAR(p, 0.2, 1e-15);
  }
  const auto edge = policy.forward_probs(params, {2, 1, 3});
  EXPECT_LT(edge[0], 1e-300);  // right leaves the grid
  for (int a = 1; a < 5; ++a) {
    EXPECT_NEAR(edge[a], 0.25, 1e-15);
  }
}

TEST(GridPolicy, EpsilonOneIsUniformChiSquare) {
  const GridPolicy policy(env::GridConfig{2}, testsupport::small_grid_arch());
  const auto params = policy.init_params(3);
  numkit::Rng rng(99);
  const auto batch = policy.sample_forward(params, 100000, 1.0, rng);
  // Per visited state, action counts against uniform over the forward mask.
  std::map<env::GridState, std::array<long, 5>> counts;
  for (const auto& rec : batch.records) {
    ASSERT_EQ(rec.actions.size(), 4u);
    for (std::size_t t = 0; t < rec.actions.size(); ++t) {
      ++counts[rec.states[t]][static_cast<std::size_t>(rec.actions[t])];
    }
  }
  double chi2 = 0.0;
  int dof = 0;
  for (const auto& [state, c] : counts) {
    const long n = std::accumulate(c.begin(), c.end(), 0L);
    if (n < 2000) {
      continue;
    }
    const auto mask = env::forward_mask(state, policy.grid());
    const int valid = static_cast<int>(std::count(mask.begin(), mask.end(), true));
    const double expected = static_cast<double>(n) / valid;
    for (int a = 0; a < 5; ++a) {
      if (!mask[a]) {
        EXPECT_EQ(c[a], 0);
        continue;
      }
      chi2 += (c[a] - expected) * (c[a] - expected) / expected;
    }
    dof += valid - 1;
  }
  ASSERT_GT(dof, 20);
  // Mean dof, sd sqrt(2 dof): a 5-sigma band.
  EXPECT_LT(chi2, dof + 5.0 * std::sqrt(2.0 * dof));
}

TEST(GridPolicy, RecordedLogPfIsUnmixedAndConsistent) {
  const GridPolicy policy(env::GridConfig{2}, testsupport::small_grid_arch());
  const auto params = policy.init_params(5);
  numkit::Rng rng(1);
  const auto batch = policy.sample_forward(params, 64, 0.3, rng);
  for (const auto& rec : batch.records) {
    ASSERT_EQ(rec.states.size(), 5u);
    EXPECT_EQ(rec.states.front(), (env::GridState{0, 0, 0}));
    EXPECT_EQ(rec.log_pf, policy.traj_log_pf(params, rec));
    EXPECT_EQ(rec.log_pb, policy.traj_log_pb(params, rec));
    long double prod_f = 1.0L;
    long double prod_b = 1.0L;
    for (std::size_t t = 0; t < rec.actions.size(); ++t) {
      prod_f *= policy.forward_probs(params, rec.states[t])[static_cast<std::size_t>(rec.actions[t])];
      prod_b *= policy.backward_probs(params, rec.states[t + 1])[static_cast<std::size_t>(rec.actions[t])];
      EXPECT_TRUE(env::is_valid(rec.states[t + 1], policy.grid()));
    }
    EXPECT_NEAR(std::exp(rec.log_pf) / static_cast<double>(prod_f), 1.0, 1e-12);
    EXPECT_NEAR(std::exp(rec.log_pb) / static_cast<double>(prod_b), 1.0, 1e-12);
  }
  const auto rescored = policy.rescore(params, batch.records);
  for (std::size_t i = 0; i < batch.records.size(); ++i) {
    EXPECT_EQ(rescored.records[i].log_pf, batch.records[i].log_pf);
    EXPECT_EQ(rescored.records[i].log_pb, batch.records[i].log_pb);
  }
}

TEST(GridPolicy, LargeBackwardBatchesScoreLikeSingleTrajectories) {
  const GridPolicy policy(env::GridConfig{1}, testsupport::small_grid_arch());
  const auto params = policy.init_params(3);
  numkit::Rng rng(5);
  const std::vector<env::GridPos> xs(5000, env::GridPos{1, 0});
  const auto recs = policy.sample_backward(params, xs, rng);
  for (std::size_t i = 0; i < recs.size(); i += 997) {
    EXPECT_EQ(recs[i].log_pf, policy.traj_log_pf(params, recs[i])) << i;
  }
}

TEST(GridPolicy, BackwardSamplesAreForwardValid) {
  const GridPolicy policy(env::GridConfig{2}, testsupport::small_grid_arch());
  const auto params = policy.init_params(7);
  numkit::Rng rng(2);
  std::vector<env::GridPos> xs;
  for (const auto& p : env::enumerate_terminals(policy.grid())) {
    for (int r = 0; r < 4; ++r) {
      xs.push_back(p);
    }
  }
  const auto recs = policy.sample_backward(params, xs, rng);
  ASSERT_EQ(recs.size(), xs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& rec = recs[i];
    EXPECT_EQ(rec.states.front(), (env::GridState{0, 0, 0}));
    EXPECT_EQ(GridPolicy::terminal_of(rec), xs[i]);
    env::GridState s{0, 0, 0};
    for (std::size_t t = 0; t < rec.actions.size(); ++t) {
      ASSERT_TRUE(env::forward_mask(s, policy.grid())[static_cast<std::size_t>(rec.actions[t])]);
      s = env::step_forward(s, rec.actions[t], policy.grid());
      EXPECT_EQ(s, rec.states[t + 1]);
    }
    EXPECT_EQ(rec.log_pf, policy.traj_log_pf(params, rec));
    EXPECT_EQ(rec.log_pb, policy.traj_log_pb(params, rec));
  }
}

TEST(TrajectoryBalance, Examples) {
  EXPECT_EQ(gfn::tb_loss(0.0, -1.7, -1.7, 0.0), 0.0);
  EXPECT_NEAR(gfn::tb_loss(std::log(2.0), -1.7, -1.7, 0.0), std::log(2.0) * std::log(2.0), 1e-15);
  const double base = gfn::tb_loss(0.3, -4.0, -2.5, -1.0);
  EXPECT_NEAR(gfn::tb_loss(0.3, -4.0 + 4 * std::log(0.7), -2.5 + 4 * std::log(0.7), -1.0), base, 1e-12);
  numkit::ScalarTape tape;
  const auto lz = tape.leaf(0.3);
  const auto loss = gfn::tb_loss(tape, gfn::log_rhat(tape, lz, tape.leaf(-4.0), tape.leaf(-2.5)), -1.0);
  EXPECT_EQ(tape.value(loss), base);
  tape.backward(loss);
  EXPECT_NEAR(tape.adjoint(lz), 2.0 * (0.3 - 4.0 + 2.5 + 1.0), 1e-14);
}

TEST(TrainStep, DeterministicAndFrozenRejected) {
  const GridPolicy policy(env::GridConfig{2}, testsupport::small_grid_arch());
  const auto field = testsupport::rings_field(2);
  const auto settings = testsupport::grid_settings(32);
  auto run = [&]() {
    gfn::Stage stage{policy.init_params(4)};
    numkit::Rng rng(8);
    std::vector<double> losses;
    for (int i = 0; i < 20; ++i) {
      losses.push_back(gfn::train_step(stage, policy, field, settings, rng).mean_loss);
    }
    return std::pair{losses, stage.params.fingerprint()};
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);

  gfn::Stage frozen{policy.init_params(4)};
  frozen.frozen = true;
  numkit::Rng rng(1);
  EXPECT_THROW((void)gfn::train_step(frozen, policy, field, settings, rng), UsageError);
}

namespace {

struct NanReward {
  [[nodiscard]] double log_reward(const env::GridPos&) const { return std::numeric_limits<double>::quiet_NaN(); }
};

}  // namespace

TEST(TrainStep, NonFiniteLossReportsTrajectory) {
  const GridPolicy policy(env::GridConfig{1}, testsupport::small_grid_arch());
  gfn::Stage stage{policy.init_params(1)};
  numkit::Rng rng(1);
  try {
    (void)gfn::train_step(stage, policy, NanReward{}, testsupport::grid_settings(4), rng);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("traj[0]"), std::string::npos);
    EXPECT_NE(msg.find("states="), std::string::npos);
  }
}

TEST(TrainStep, SmallGridConverges) {
  const GridPolicy policy(env::GridConfig{2});
  const auto field = testsupport::rings_field(2);
  auto base = testsupport::grid_settings(128, 0.003, 0.1);
  base.optimizer.weight_decay = 0.0;
  gfn::Stage stage{policy.init_params(10)};
  numkit::Rng rng(10);
  double tail = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const auto settings = testsupport::scaled(base, testsupport::cosine_factor(i, 1000, 2000, 0.05));
    const double loss = gfn::train_step(stage, policy, field, settings, rng).mean_loss;
    if (i >= 1950) {
      tail += loss / 50.0;
    }
  }
  EXPECT_LT(tail, 1e-3);
}

TEST(SeqPolicy, RolloutsStopAndReplay) {
  const env::SeqConfig cfg;
  const SeqPolicy policy(cfg);
  const auto params = policy.init_params(2);
  EXPECT_TRUE((params.at(SeqPolicy::kEmbeddingName).value.row(0).array() == 0.0).all());
  numkit::Rng rng(3);
  const auto batch = policy.sample_forward(params, 200, 0.1, rng);
  std::vector<std::vector<int>> xs;
  for (const auto& rec : batch.records) {
    ASSERT_TRUE(rec.states.back().terminated);
    EXPECT_EQ(rec.actions.back(), env::kStopToken);
    EXPECT_LE(rec.states.back().length, cfg.max_length);
    EXPECT_EQ(rec.log_pb, 0.0);
    EXPECT_EQ(rec.log_pf, policy.traj_log_pf(params, rec));
    long double prod = 1.0L;
    for (std::size_t t = 0; t < rec.actions.size(); ++t) {
      prod *= policy.forward_probs(params, rec.states[t])[static_cast<std::size_t>(rec.actions[t])];
    }
    EXPECT_NEAR(std::exp(rec.log_pf) / static_cast<double>(prod), 1.0, 1e-12);
    xs.push_back(SeqPolicy::terminal_of(rec));
  }
  const auto replayed = policy.replay_log_pf(params, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_EQ(replayed[i], batch.records[i].log_pf);
  }
  const auto back = policy.sample_backward(params, xs, rng);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_EQ(back[i].actions, batch.records[i].actions);
    EXPECT_EQ(back[i].log_pb, 0.0);
  }
}

TEST(SeqPolicy, WorksWithoutPositionFeatures) {
  const SeqPolicy policy(env::SeqConfig{}, gfn::SeqArch{8, 0, 16});
  EXPECT_EQ(policy.forward_shape().input_width(), 6 * 8);
  const auto params = policy.init_params(4);
  numkit::Rng rng(4);
  const auto batch = policy.sample_forward(params, 16, 0.0, rng);
  for (const auto& rec : batch.records) {
    EXPECT_TRUE(std::isfinite(rec.log_pf));
  }
}

TEST(SeqPolicy, EpsilonOneUniformOverValid) {
  const env::SeqConfig cfg{20, 2, 2};
  const SeqPolicy policy(cfg);
  const auto params = policy.init_params(2);
  numkit::Rng rng(5);
  const auto batch = policy.sample_forward(params, 40000, 1.0, rng);
  std::array<long, 20> first{};
  for (const auto& rec : batch.records) {
    ++first[static_cast<std::size_t>(rec.actions.front())];
    if (rec.states.back().length == 2) {
      EXPECT_EQ(rec.actions.size(), 3u);
    }
  }
  double chi2 = 0.0;
  for (long c : first) {
    chi2 += (c - 2000.0) * (c - 2000.0) / 2000.0;
  }
  EXPECT_LT(chi2, 19 + 5 * std::sqrt(38.0));
}

TEST(SeqPolicy, TrainingRaisesRewardOfMotif) {
  const env::SeqConfig cfg{20, 3, 3};
  const SeqPolicy policy(cfg, gfn::SeqArch{16, 4, 32});
  const rewards::SeqReward reward(std::make_shared<rewards::SyntheticScorer>(), rewards::SeqRewardConfig{});
  gfn::Stage stage{policy.init_params(1)};
  numkit::Rng rng(2);
  const auto settings = testsupport::seq_settings(64, 0.01, 0.1);
  double first = 0.0;
  double last = 0.0;
  for (int i = 0; i < 300; ++i) {
    const double loss = gfn::train_step(stage, policy, reward, settings, rng).mean_loss;
    if (i < 10) first += loss / 10;
    if (i >= 290) last += loss / 10;
  }
  EXPECT_LT(last, 0.5 * first);
}
