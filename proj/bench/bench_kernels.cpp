// Parallel kernels vs their serial references.
//
//   ./build/bench/bench_kernels --benchmark_filter=Route
//   OMP_NUM_THREADS=8 ./build/bench/bench_kernels

#include <benchmark/benchmark.h>

#include <vector>

#include "eden/kernels.hpp"
#include "eden/reference.hpp"
#include "eden/rng.hpp"

namespace {

using eden::Rng;
using eden::Vec3;
using eden::cem::RouterOption;

struct PlaneFixture {
  int dim;
  std::vector<double> p, w, dst;
  std::vector<RouterOption> r;
  std::vector<std::int32_t> route;

  explicit PlaneFixture(int d) : dim(d) {
    const auto n = static_cast<std::size_t>(d) * d;
    Rng rng(42);
    p.resize(n);
    w.resize(n);
    r.resize(n);
    dst.assign(n, 0.0);
    route.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.uniform(0.0, 2.0);
      w[i] = rng.uniform01();
      r[i] = static_cast<RouterOption>(rng.below(9));
    }
  }
};

void BM_PlaneSumParallel(benchmark::State& state) {
  PlaneFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eden::kernels::plane_sum(f.p, f.dim));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.p.size()));
}

void BM_PlaneSumSerial(benchmark::State& state) {
  PlaneFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eden::reference::plane_sum(f.p, f.dim));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.p.size()));
}

void BM_RoutePlaneParallel(benchmark::State& state) {
  PlaneFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    eden::kernels::route_plane(f.p, f.w, f.r, f.dst, f.route, f.dim, 0.05);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.p.size()));
}

void BM_RoutePlaneSerial(benchmark::State& state) {
  PlaneFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    eden::reference::route_plane(f.p, f.w, f.r, f.dst, f.route, f.dim, 0.05);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.p.size()));
}

struct FieldFixture {
  std::vector<Vec3> pos;
  std::vector<double> mag;

  explicit FieldFixture(std::size_t n) : pos(n), mag(n) {
    Rng rng(7);
    for (std::size_t i = 0; i < n; ++i) {
      pos[i] = {rng.uniform(0, 64), rng.uniform(0, 64), rng.uniform(0, 64)};
      mag[i] = rng.uniform(0.1, 2.0);
    }
  }
};

void BM_DensityGradientParallel(benchmark::State& state) {
  FieldFixture f(static_cast<std::size_t>(state.range(0)));
  const Vec3 at{32, 32, 32};
  for (auto _ : state) benchmark::DoNotOptimize(eden::kernels::density_gradient(f.pos, f.mag, at, 2.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DensityGradientSerial(benchmark::State& state) {
  FieldFixture f(static_cast<std::size_t>(state.range(0)));
  const Vec3 at{32, 32, 32};
  for (auto _ : state) benchmark::DoNotOptimize(eden::reference::density_gradient(f.pos, f.mag, at, 2.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_PlaneSumParallel)->Arg(8)->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(BM_PlaneSumSerial)->Arg(8)->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(BM_RoutePlaneParallel)->Arg(8)->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(BM_RoutePlaneSerial)->Arg(8)->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(BM_DensityGradientParallel)->Arg(64)->Arg(4096)->Arg(65536);
BENCHMARK(BM_DensityGradientSerial)->Arg(64)->Arg(4096)->Arg(65536);

BENCHMARK_MAIN();
