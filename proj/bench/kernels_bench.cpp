// Serial reference kernels against their OpenMP counterparts, plus one
// federated round with one thread versus all threads.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "fgcl/experiment.hpp"
#include "fgcl/kernels.hpp"
#include "fgcl/rng.hpp"

namespace {

fgcl::Tensor random_tensor(std::size_t r, std::size_t c, std::uint64_t seed) {
  fgcl::Rng rng(seed);
  fgcl::Tensor t(r, c);
  for (auto& v : t.data()) v = rng.normal(0.0, 1.0);
  return t;
}

template <void (*Kernel)(const fgcl::Tensor&, const fgcl::Tensor&, fgcl::Tensor&)>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_tensor(n, n, 1);
  const auto b = random_tensor(n, n, 2);
  fgcl::Tensor out(n, n);
  for (auto _ : state) {
    Kernel(a, b, out);
    benchmark::DoNotOptimize(out.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n * n));
}

template <void (*Kernel)(const fgcl::Tensor&, const fgcl::Tensor&, fgcl::Tensor&)>
void BM_MatmulTn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_tensor(n, n, 3);
  const auto b = random_tensor(n, n, 4);
  fgcl::Tensor out(n, n);
  for (auto _ : state) {
    Kernel(a, b, out);
    benchmark::DoNotOptimize(out.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n * n));
}

template <void (*Kernel)(double, std::span<const double>, std::span<double>)>
void BM_Axpy(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_tensor(1, n, 5);
  auto y = random_tensor(1, n, 6);
  for (auto _ : state) {
    Kernel(1e-3, x.data(), y.data());
    benchmark::DoNotOptimize(y.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

void BM_TrainRounds(benchmark::State& state) {
  const int threads = state.range(0) == 0 ? omp_get_max_threads() : 1;
  fgcl::exp::ExperimentConfig cfg;
  cfg.synthetic.n_graphs = 80;
  cfg.train.rounds = 2;
  cfg.train.encoder.hidden = 32;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(threads);
  for (auto _ : state) {
    auto out = fgcl::exp::run_experiment(cfg, false);
    benchmark::DoNotOptimize(out.result.reports.data());
  }
  omp_set_num_threads(saved);
  state.SetLabel(std::to_string(threads) + " thread(s)");
}

}  // namespace

BENCHMARK(BM_Matmul<fgcl::kernels::matmul_serial>)->Arg(32)->Arg(128)->Arg(256);
BENCHMARK(BM_Matmul<fgcl::kernels::matmul>)->Arg(32)->Arg(128)->Arg(256);
BENCHMARK(BM_MatmulTn<fgcl::kernels::matmul_tn_acc_serial>)->Arg(32)->Arg(128)->Arg(256);
BENCHMARK(BM_MatmulTn<fgcl::kernels::matmul_tn_acc>)->Arg(32)->Arg(128)->Arg(256);
BENCHMARK(BM_Axpy<fgcl::kernels::axpy_serial>)->Arg(1 << 12)->Arg(1 << 20);
BENCHMARK(BM_Axpy<fgcl::kernels::axpy>)->Arg(1 << 12)->Arg(1 << 20);
BENCHMARK(BM_TrainRounds)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
