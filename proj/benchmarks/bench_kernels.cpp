#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "pointsup/implicit_head.hpp"
#include "pointsup/mask.hpp"
#include "pointsup/point_loss.hpp"
#include "pointsup/random.hpp"
#include "pointsup/subdivision.hpp"

using namespace pointsup;

namespace {

std::vector<Vec2> random_uv(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec2> out(n);
  for (auto& p : out) p = {rng.uniform(), rng.uniform()};
  return out;
}

Bitmask disk(int size) {
  Bitmask m(size, size);
  const double c = size / 2.0, r = size / 3.0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      m.set(x, y, std::hypot(x + 0.5 - c, y + 0.5 - c) < r);
  return m;
}

void BM_BilinearSample(benchmark::State& state) {
  GridPrediction grid(112, 112);
  Rng rng(1);
  for (auto& v : grid.values) v = rng.normal();
  const auto uv = random_uv(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(bilinear_sample(grid, uv));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BilinearSample)->Arg(10)->Arg(1000);

void BM_HeadForward(benchmark::State& state) {
  HeadArch arch;
  const auto params = init_head_params(arch, 3);
  const auto n = static_cast<std::size_t>(state.range(0));
  HeadInputs in(arch.input_dim(), n);
  Rng rng(4);
  for (auto& v : in.data) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(head_forward_batch(params, in));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HeadForward)->Arg(10)->Arg(784);

void BM_HeadBackward(benchmark::State& state) {
  HeadArch arch;
  const auto params = init_head_params(arch, 3);
  const auto n = static_cast<std::size_t>(state.range(0));
  HeadInputs in(arch.input_dim(), n);
  Rng rng(4);
  for (auto& v : in.data) v = rng.normal();
  std::vector<double> upstream(n, 1.0), grad(params.flat.size());
  for (auto _ : state) {
    head_backward_batch(params, in, upstream, grad);
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HeadBackward)->Arg(10)->Arg(784);

void BM_SubdivisionRender(benchmark::State& state) {
  const PointFunction fn = [](std::span<const Vec2> uv, std::span<double> out) {
    for (std::size_t i = 0; i < uv.size(); ++i)
      out[i] = 40.0 * (0.3 - std::hypot(uv[i].x - 0.5, uv[i].y - 0.5));
  };
  for (auto _ : state) benchmark::DoNotOptimize(render(fn, RenderConfig{}));
}
BENCHMARK(BM_SubdivisionRender)->Unit(benchmark::kMillisecond);

void BM_BoundaryDistance(benchmark::State& state) {
  const auto m = disk(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(boundary_distance(m));
}
BENCHMARK(BM_BoundaryDistance)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_RleRoundTrip(benchmark::State& state) {
  const auto m = disk(256);
  for (auto _ : state) benchmark::DoNotOptimize(rle_decode(rle_encode(m)));
}
BENCHMARK(BM_RleRoundTrip);

}  // namespace
BENCHMARK_MAIN();
