// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Throughput comparison between the serial reference kernels and their
// OpenMP-parallel counterparts. Build with -DCMAKE_BUILD_TYPE=Release and
// run ./bench_kernels; OMP_NUM_THREADS controls the parallel side.

#include <benchmark/benchmark.h>

#include <vector>

#include "avse/kernels.hpp"
#include "avse/rng.hpp"

namespace {

std::vector<double> random_vec(size_t n, uint64_t seed) {
  avse::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

void bm_matmul_serial(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = random_vec(static_cast<size_t>(n) * n, 1);
  const auto b = random_vec(static_cast<size_t>(n) * n, 2);
  std::vector<double> c(static_cast<size_t>(n) * n);
  for (auto _ : state) {
    avse::kernels::serial::matmul(a.data(), b.data(), c.data(), n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(n) * n * n);
}

void bm_matmul_omp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = random_vec(static_cast<size_t>(n) * n, 1);
  const auto b = random_vec(static_cast<size_t>(n) * n, 2);
  std::vector<double> c(static_cast<size_t>(n) * n);
  for (auto _ : state) {
    avse::kernels::matmul(a.data(), b.data(), c.data(), n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(n) * n * n);
}

void bm_conv2d_serial(benchmark::State& state) {
  const int b = 8, cin = 8, h = 32, w = 32, cout = 16;
  const auto x = random_vec(static_cast<size_t>(b) * cin * h * w, 3);
  const auto k = random_vec(static_cast<size_t>(cout) * cin * 9, 4);
  const auto bias = random_vec(static_cast<size_t>(cout), 5);
  std::vector<double> y(static_cast<size_t>(b) * cout * h * w);
  for (auto _ : state) {
    avse::kernels::serial::conv2d_forward(x.data(), k.data(), bias.data(), y.data(), b,
                                          cin, h, w, cout);
    benchmark::DoNotOptimize(y.data());
  }
}

void bm_conv2d_omp(benchmark::State& state) {
  const int b = 8, cin = 8, h = 32, w = 32, cout = 16;
  const auto x = random_vec(static_cast<size_t>(b) * cin * h * w, 3);
  const auto k = random_vec(static_cast<size_t>(cout) * cin * 9, 4);
  const auto bias = random_vec(static_cast<size_t>(cout), 5);
  std::vector<double> y(static_cast<size_t>(b) * cout * h * w);
  for (auto _ : state) {
    avse::kernels::conv2d_forward(x.data(), k.data(), bias.data(), y.data(), b, cin, h, w,
                                  cout);
    benchmark::DoNotOptimize(y.data());
  }
}

void bm_maxpool_serial(benchmark::State& state) {
  const int b = 16, c = 16, h = 64, w = 64;
  const auto x = random_vec(static_cast<size_t>(b) * c * h * w, 6);
  std::vector<double> y(static_cast<size_t>(b) * c * (h / 2) * (w / 2));
  std::vector<int64_t> argmax(y.size());
  for (auto _ : state) {
    avse::kernels::serial::maxpool2_forward(x.data(), y.data(), argmax.data(), b, c, h, w);
    benchmark::DoNotOptimize(y.data());
  }
}

void bm_maxpool_omp(benchmark::State& state) {
  const int b = 16, c = 16, h = 64, w = 64;
  const auto x = random_vec(static_cast<size_t>(b) * c * h * w, 6);
  std::vector<double> y(static_cast<size_t>(b) * c * (h / 2) * (w / 2));
  std::vector<int64_t> argmax(y.size());
  for (auto _ : state) {
    avse::kernels::maxpool2_forward(x.data(), y.data(), argmax.data(), b, c, h, w);
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(bm_matmul_serial)->Arg(128)->Arg(256);
BENCHMARK(bm_matmul_omp)->Arg(128)->Arg(256);
BENCHMARK(bm_conv2d_serial);
BENCHMARK(bm_conv2d_omp);
BENCHMARK(bm_maxpool_serial);
BENCHMARK(bm_maxpool_omp);

BENCHMARK_MAIN();
