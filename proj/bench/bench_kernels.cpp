// Serial vs OpenMP dense kernels at the Q-network's layer shapes.

#include <benchmark/benchmark.h>

#include <vector>

#include "nbiot/dqn.hpp"
#include "nbiot/kernels.hpp"
#include "nbiot/mlp.hpp"
#include "nbiot/rng.hpp"

namespace {

using nbiot::kernels::Backend;
using nbiot::kernels::DenseShape;

std::vector<double> random_vec(std::size_t n, std::uint64_t index) {
  nbiot::RngStream rng(7, "bench", index);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform() - 0.5;
  return v;
}

Backend backend_of(const benchmark::State& st) { return st.range(0) == 0 ? Backend::kSerial : Backend::kOpenMP; }

void BM_DenseForward(benchmark::State& st) {
  const DenseShape s{static_cast<int>(st.range(1)), static_cast<int>(st.range(2)), static_cast<int>(st.range(3))};
  const auto w = random_vec(static_cast<std::size_t>(s.out * s.in), 1);
  const auto b = random_vec(static_cast<std::size_t>(s.out), 2);
  const auto x = random_vec(static_cast<std::size_t>(s.batch * s.in), 3);
  std::vector<double> y(static_cast<std::size_t>(s.batch * s.out));
  const auto be = backend_of(st);
  for (auto _ : st) {
    nbiot::kernels::dense_forward(be, s, w, b, x, y, true);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(st.iterations() * s.batch * s.in * s.out);
}

void BM_DenseBackward(benchmark::State& st) {
  const DenseShape s{static_cast<int>(st.range(1)), static_cast<int>(st.range(2)), static_cast<int>(st.range(3))};
  const auto w = random_vec(static_cast<std::size_t>(s.out * s.in), 1);
  const auto x = random_vec(static_cast<std::size_t>(s.batch * s.in), 3);
  const auto dy = random_vec(static_cast<std::size_t>(s.batch * s.out), 4);
  std::vector<double> dw(w.size()), db(static_cast<std::size_t>(s.out)), dx(x.size());
  const auto be = backend_of(st);
  for (auto _ : st) {
    nbiot::kernels::dense_backward(be, s, w, x, dy, dw, db, dx);
    benchmark::DoNotOptimize(dw.data());
    benchmark::DoNotOptimize(dx.data());
  }
  st.SetItemsProcessed(st.iterations() * 2 * s.batch * s.in * s.out);
}

// One full minibatch update of a 96-128-128-128-4 Q-network.
void BM_FitBatch(benchmark::State& st) {
  nbiot::Mlp net({96, 128, 128, 128, 4}, backend_of(st));
  nbiot::RngStream init(7, nbiot::Stream::kInit);
  net.init_uniform(init);
  nbiot::RmsPropState opt(net, 1e-4, 0.9, 1e-6);
  const int batch = static_cast<int>(st.range(1));
  const auto states = random_vec(static_cast<std::size_t>(batch * 96), 5);
  std::vector<int> actions(static_cast<std::size_t>(batch));
  for (std::size_t i = 0; i < actions.size(); ++i) actions[i] = static_cast<int>(i % 4);
  const auto targets = random_vec(static_cast<std::size_t>(batch), 6);
  for (auto _ : st) {
    benchmark::DoNotOptimize(nbiot::dqn::fit_batch(net, opt, states, actions, targets));
  }
}

}  // namespace

// Args: backend (0 serial, 1 openmp), batch, in, out.
BENCHMARK(BM_DenseForward)->ArgsProduct({{0, 1}, {1, 32, 256}, {128}, {128}});
BENCHMARK(BM_DenseForward)->ArgsProduct({{0, 1}, {32}, {96}, {128}});
BENCHMARK(BM_DenseBackward)->ArgsProduct({{0, 1}, {32, 256}, {128}, {128}});
BENCHMARK(BM_FitBatch)->ArgsProduct({{0, 1}, {32, 256}});

BENCHMARK_MAIN();
