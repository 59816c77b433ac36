#include <benchmark/benchmark.h>

#include "tango/dynamics/tango.hpp"
#include "tango/graphs/generators.hpp"
#include "tango/training/trainer.hpp"

using namespace tango;

namespace {

ad::Tensor features(std::size_t n, std::size_t d, Rng& rng) {
  ad::Tensor h(n, d);
  for (auto& v : h.values()) v = rng.uniform(-1.0, 1.0);
  return h;
}

struct Setup {
  graphs::Graph g;
  dynamics::EnergyModel em;
  dynamics::TangentModel tm;
  ad::Tensor h;
};

// |V| + |E| = size with two edges per node on average.
Setup scaling_setup(std::size_t size, std::size_t d, nets::LayerKind kind) {
  Rng rng(size);
  Setup s;
  const std::size_t n = size / 3;
  s.g = graphs::random_sparse_graph(n, size - n, rng);
  s.em = dynamics::init_energy_model(kind, d, 2, nets::Activation::Tanh, rng);
  s.tm = dynamics::init_tangent_model(kind, d, 2, nets::Activation::Tanh, rng);
  s.h = features(n, d, rng);
  return s;
}

void BM_TangoStep(benchmark::State& state) {
  const auto s = scaling_setup(static_cast<std::size_t>(state.range(0)), 8, nets::LayerKind::GatedGcn);
  dynamics::TangoConfig cfg;
  cfg.d = 8;
  for (auto _ : state) benchmark::DoNotOptimize(dynamics::tango_step(s.em, s.tm, s.g, s.h, cfg).h);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_TangoStep)->RangeMultiplier(2)->Range(1000, 16000)->Complexity(benchmark::oN);

void BM_TangoStepGcn(benchmark::State& state) {
  const auto s = scaling_setup(static_cast<std::size_t>(state.range(0)), 8, nets::LayerKind::Gcn);
  dynamics::TangoConfig cfg;
  cfg.d = 8;
  for (auto _ : state) benchmark::DoNotOptimize(dynamics::tango_step(s.em, s.tm, s.g, s.h, cfg).h);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_TangoStepGcn)->RangeMultiplier(2)->Range(1000, 16000)->Complexity(benchmark::oN);

void BM_EnergyGradient(benchmark::State& state) {
  const auto s = scaling_setup(4000, static_cast<std::size_t>(state.range(0)), nets::LayerKind::GatedGcn);
  for (auto _ : state) benchmark::DoNotOptimize(dynamics::energy_gradient(s.em, s.g, s.h));
}
BENCHMARK(BM_EnergyGradient)->Arg(8)->Arg(20)->Arg(32);

void BM_DirichletStep(benchmark::State& state) {
  Rng rng(1);
  const auto size = static_cast<std::size_t>(state.range(0));
  const auto g = graphs::random_sparse_graph(size / 3, size - size / 3, rng);
  const auto h = features(g.num_nodes(), 8, rng);
  for (auto _ : state) benchmark::DoNotOptimize(dynamics::dirichlet_flow_step(g, h, 0.01).h);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DirichletStep)->RangeMultiplier(4)->Range(1000, 64000)->Complexity(benchmark::oN);

// Per-graph training cost at the desk-scale configuration (L=10, L_gnn=2, d=20).
training::ModelConfig desk_model(training::ModelKind kind) {
  training::ModelConfig m;
  m.kind = kind;
  m.tango.L = 10;
  m.tango.d = 20;
  m.gnn_depth = 2;
  return training::config_for_task(m, graphs::Task::Diameter);
}

graphs::DatasetSplit desk_graphs() {
  graphs::GppConfig g;
  g.train = 16;
  g.val = 0;
  g.test = 0;
  return graphs::build_gpp_dataset(g);
}

void BM_TrainGradient(benchmark::State& state) {
  const auto data = desk_graphs();
  Rng rng(0);
  const auto p = training::init_predictor(desk_model(static_cast<training::ModelKind>(state.range(0))), rng);
  std::vector<const graphs::GraphSample*> batch;
  for (const auto& s : data.train) batch.push_back(&s);
  for (auto _ : state) benchmark::DoNotOptimize(training::batch_gradient(p, batch, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_TrainGradient)->Arg(static_cast<int>(training::ModelKind::Tango))
    ->Arg(static_cast<int>(training::ModelKind::Backbone))->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
  const auto data = desk_graphs();
  Rng rng(0);
  const auto p = training::init_predictor(desk_model(training::ModelKind::Tango), rng);
  for (auto _ : state) benchmark::DoNotOptimize(training::evaluate(p, data.train, training::Metric::Log10Mse));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.train.size()));
}
BENCHMARK(BM_Predict)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
