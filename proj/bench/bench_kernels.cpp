// Serial reference vs OpenMP paths for the hot kernels, plus a small sweep
// run with one worker and with every available thread.
//
//   ./bench_kernels --benchmark_filter=Gram

#include <benchmark/benchmark.h>
#include <omp.h>

#include "cplab/data.hpp"
#include "cplab/kernels.hpp"
#include "cplab/runner.hpp"
#include "cplab/trained_model.hpp"

namespace {

using cplab::kernels::Exec;

Eigen::MatrixXd points(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  auto eng = cplab::make_engine(seed);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(eng);
  return x;
}

template <Exec E>
void BM_RbfGram(benchmark::State& state) {
  const auto x = points(state.range(0), 4, 1);
  const Eigen::VectorXd ls = Eigen::VectorXd::Constant(4, 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(cplab::kernels::rbf_gram(x, 1.0, ls, E));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

template <Exec E>
void BM_RbfCross(benchmark::State& state) {
  const auto a = points(state.range(0), 4, 2);
  const auto b = points(1000, 4, 3);
  const Eigen::VectorXd ls = Eigen::VectorXd::Constant(4, 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(cplab::kernels::rbf_cross(a, b, 1.0, ls, E));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 1000);
}

// Per-row predictions of a fitted GP over a test batch.
template <Exec E>
void BM_GpPredict(benchmark::State& state) {
  static const auto model = [] {
    cplab::TrainConfig cfg;
    cfg.gp_steps = 20;
    return cplab::fit_gp(cplab::generate({1, 400, cplab::NoiseKind::HomoGauss, 0.3, 5}), cfg);
  }();
  const auto x = points(state.range(0), 1, 6);
  std::vector<cplab::Prediction> out(static_cast<std::size_t>(x.rows()));
  for (auto _ : state) {
    cplab::kernels::for_each_index(
        x.rows(), [&](Eigen::Index i) { out[static_cast<std::size_t>(i)] = model.predict(x.row(i)); }, E);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Sweep(benchmark::State& state) {
  auto cfg = cplab::ExperimentConfig::desk_preset();
  cfg.noises = {cplab::NoiseKind::HeteroGauss};
  cfg.pairs = {cplab::parse_pair("NCM-NN"), cplab::parse_pair("qNCM-QR")};
  cfg.sizes = {200};
  cfg.epsilons = {0.1};
  cfg.repetitions = 8;
  cfg.test_size = 2000;
  cfg.train.mvnn_epochs = 100;
  cfg.workers = static_cast<int>(state.range(0));
  const cplab::Runner runner(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(runner.run_sweep(false).records.size());
  state.counters["workers"] = static_cast<double>(cfg.workers);
}

BENCHMARK(BM_RbfGram<Exec::Serial>)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RbfGram<Exec::Parallel>)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RbfCross<Exec::Serial>)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RbfCross<Exec::Parallel>)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GpPredict<Exec::Serial>)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GpPredict<Exec::Parallel>)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sweep)->Arg(1)->Arg(omp_get_max_threads())->Unit(benchmark::kSecond)->Iterations(1)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
