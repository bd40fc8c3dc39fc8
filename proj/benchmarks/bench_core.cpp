#include <benchmark/benchmark.h>

#include <vector>

#include "bgfn/boosting/ensemble.hpp"
#include "bgfn/gfn/grid_policy.hpp"
#include "bgfn/gfn/seq_policy.hpp"
#include "bgfn/numkit/logspace.hpp"
#include "bgfn/numkit/mlp.hpp"
#include "bgfn/rewards/grid_rewards.hpp"

using namespace bgfn;

static void BM_LogSumExp(benchmark::State& state) {
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  numkit::Rng rng(1);
  for (auto& x : v) {
    x = numkit::uniform01(rng) * 40.0 - 20.0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(numkit::log_sum_exp(v));
  }
}
BENCHMARK(BM_LogSumExp)->Arg(5)->Arg(961)->Arg(100000);

static void BM_MlpForwardBackward(benchmark::State& state) {
  const numkit::MlpShape shape{"pf", {19, 128, 128, 5}};
  numkit::ParamSet params;
  numkit::Rng rng(2);
  numkit::add_mlp_params(params, shape, "pf", rng);
  numkit::Matrix input = numkit::Matrix::Random(state.range(0), 19);
  for (auto _ : state) {
    numkit::MlpTape tape;
    const auto out = numkit::mlp_forward(params, shape, input, &tape);
    benchmark::DoNotOptimize(numkit::mlp_backward(params, shape, tape, out));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForwardBackward)->Arg(128)->Arg(3840);

static void BM_GridRollout(benchmark::State& state) {
  const gfn::GridPolicy policy(env::GridConfig{static_cast<int>(state.range(0))});
  const auto params = policy.init_params(10);
  numkit::Rng rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(policy.sample_forward(params, 128, 0.0, rng, true));
  }
}
BENCHMARK(BM_GridRollout)->Arg(2)->Arg(15)->Unit(benchmark::kMillisecond);

static void BM_GridTrainStep(benchmark::State& state) {
  const env::GridConfig grid{static_cast<int>(state.range(0))};
  const gfn::GridPolicy policy(grid);
  const auto reward = rewards::GridRewardField::build(grid, {});
  gfn::Stage stage{policy.init_params(10), 1, false, 0};
  gfn::TrainSettings settings;
  settings.optimizer.learning_rates = {{"pf", 1e-2}, {"pb", 1e-2}, {"logz", 5e-2}};
  numkit::Rng rng(4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gfn::train_step(stage, policy, reward, settings, rng));
  }
}
BENCHMARK(BM_GridTrainStep)->Arg(2)->Arg(7)->Arg(15)->Unit(benchmark::kMillisecond);

static void BM_SeqRollout(benchmark::State& state) {
  const gfn::SeqPolicy policy(env::SeqConfig{});
  const auto params = policy.init_params(10);
  numkit::Rng rng(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(policy.sample_forward(params, static_cast<std::size_t>(state.range(0)), 0.0, rng, true));
  }
}
BENCHMARK(BM_SeqRollout)->Arg(256)->Arg(4096)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
