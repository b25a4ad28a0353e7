#include <benchmark/benchmark.h>

#include <random>

#include "prefcc/agent.hpp"
#include "prefcc/netsim.hpp"
#include "prefcc/nn.hpp"
#include "prefcc/objective_graph.hpp"
#include "prefcc/trainer.hpp"

namespace {

using namespace prefcc;

void BM_TrunkForward(benchmark::State& state) {
  const nn::MlpSpec spec = nn::default_trunk(46);
  std::mt19937_64 rng(1);
  const nn::MlpParams p = nn::init_mlp(spec, rng);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(46, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(nn::mlp_forward_batch(spec, p, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrunkForward)->Arg(1)->Arg(100);

void BM_TrunkBackward(benchmark::State& state) {
  const nn::MlpSpec spec = nn::default_trunk(46);
  std::mt19937_64 rng(1);
  const nn::MlpParams p = nn::init_mlp(spec, rng);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(46, state.range(0));
  const Eigen::MatrixXd up = Eigen::MatrixXd::Random(32, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(nn::mlp_backward(spec, p, x, up));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrunkBackward)->Arg(1)->Arg(100);

void BM_LinkStep(benchmark::State& state) {
  LinkState link = link_reset(LinkConfig{mbps_to_pps(5), 0.02, 100, 0.01, 1});
  for (auto _ : state) {
    benchmark::DoNotOptimize(link_step_mi(link, 450.0, next_mi_duration(link), SimMode::kStochastic));
  }
}
BENCHMARK(BM_LinkStep);

void BM_SortObjectives(benchmark::State& state) {
  const ObjectiveGraph g = build_objective_graph(static_cast<int>(state.range(0)));
  const std::vector<WeightVector> boots{g.vertices.front(), g.vertices[g.size() / 2], g.vertices.back()};
  for (auto _ : state) benchmark::DoNotOptimize(sort_objectives(g, boots));
}
BENCHMARK(BM_SortObjectives)->Arg(10)->Arg(20);

void BM_TrainIteration(benchmark::State& state) {
  TrainConfig cfg;
  Learner l = Learner::create(cfg);
  const LinkSource links = fixed_link(LinkConfig{mbps_to_pps(5), 0.02, 100, 0.0, 1});
  const WeightVector w = WeightVector::create(0.8, 0.1, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(train_iteration(l, links, w));
}
BENCHMARK(BM_TrainIteration)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
