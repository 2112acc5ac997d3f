#include <benchmark/benchmark.h>

#include "mpal/eigensolver.hpp"
#include "mpal/hamiltonian.hpp"
#include "mpal/resolvent.hpp"
#include "mpal/spectral.hpp"

namespace {

mpal::ModelConfig two_particles() {
  mpal::ModelConfig m;
  m.N = 2;
  m.d = 1;
  m.L0 = 3;
  return m;
}

mpal::FiniteVolumeOperator make_op(std::int64_t L, std::uint64_t seed = 1) {
  const auto m = two_particles();
  const mpal::MultiCube cube{mpal::LatticePoint::origin(m.N, m.d), L};
  return mpal::assemble(cube, mpal::sample_field(seed, mpal::required_field_region(cube, m.bump.r1), m.v), m);
}

void BM_Assemble(benchmark::State& state) {
  const auto m = two_particles();
  const mpal::MultiCube cube{mpal::LatticePoint::origin(m.N, m.d), state.range(0)};
  const auto field = mpal::sample_field(1, mpal::required_field_region(cube, m.bump.r1), m.v);
  for (auto _ : state) benchmark::DoNotOptimize(mpal::assemble(cube, field, m));
  state.counters["dim"] = static_cast<double>(mpal::assemble(cube, field, m).dim());
}
BENCHMARK(BM_Assemble)->Arg(3)->Arg(6)->Arg(15)->Unit(benchmark::kMillisecond);

void BM_ClassifyCube(benchmark::State& state) {
  const auto op = make_op(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mpal::classify_cube(op, 0.25, 0.2));
}
BENCHMARK(BM_ClassifyCube)->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_CountBelow(benchmark::State& state) {
  const auto op = make_op(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mpal::count_below(op.matrix, 0.5));
}
BENCHMARK(BM_CountBelow)->Arg(6)->Arg(15)->Unit(benchmark::kMillisecond);

void BM_LowestEigenpair(benchmark::State& state) {
  const auto op = make_op(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mpal::lowest_eigensystem(op.matrix, 1));
}
BENCHMARK(BM_LowestEigenpair)->Arg(6)->Arg(15)->Unit(benchmark::kMillisecond);

void BM_WindowEigenpairs(benchmark::State& state) {
  const auto op = make_op(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mpal::eigenpairs_in_window(op, 3.0, 5.0));
}
BENCHMARK(BM_WindowEigenpairs)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
