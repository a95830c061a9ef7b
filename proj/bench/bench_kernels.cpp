#include <benchmark/benchmark.h>

#include "objrec/eidolon.hpp"
#include "objrec/image.hpp"
#include "objrec/kernels.hpp"
#include "objrec/rng.hpp"

using namespace objrec;

namespace {

Image noise_image(int n, int planes, std::uint64_t seed) {
  Image img(n, n, planes);
  const CounterRng rng(seed);
  auto d = img.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = rng.uniform01(i);
  return img;
}

template <bool Parallel>
void BM_Luma(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image rgb = noise_image(n, 3, 1);
  Image out(n, n, 1);
  for (auto _ : state) {
    if constexpr (Parallel) kernels::luma(rgb.data(), out.data());
    else reference::luma(rgb.data(), out.data());
    benchmark::DoNotOptimize(out.data().data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

template <bool Parallel>
void BM_Affine(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image in = noise_image(n, 1, 2);
  Image out(n, n, 1);
  for (auto _ : state) {
    if constexpr (Parallel) kernels::affine(in.data(), out.data(), 0.3, 0.35);
    else reference::affine(in.data(), out.data(), 0.3, 0.35);
    benchmark::DoNotOptimize(out.data().data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

template <bool Parallel>
void BM_UniformNoise(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image in = noise_image(n, 1, 3);
  Image out(n, n, 1);
  const CounterRng rng(4);
  for (auto _ : state) {
    std::size_t clipped = Parallel ? kernels::add_uniform_noise(in.data(), out.data(), 0.35, rng)
                                   : reference::add_uniform_noise(in.data(), out.data(), 0.35, rng);
    benchmark::DoNotOptimize(clipped);
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

template <bool Parallel>
void BM_GaussianBlur(benchmark::State& state) {
  const Image in = noise_image(256, 1, 5);
  const double sigma = static_cast<double>(state.range(0));
  for (auto _ : state) {
    Image out = Parallel ? kernels::gaussian_blur(in, sigma) : reference::gaussian_blur(in, sigma);
    benchmark::DoNotOptimize(out.data().data());
  }
}

template <bool Parallel>
void BM_BilinearWarp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image in = noise_image(n, 1, 6);
  const auto field = eidolon::displacement_field(n, n, 10.0, 8.0, 7);
  for (auto _ : state) {
    Image out = Parallel ? kernels::bilinear_warp(in, field.dx, field.dy)
                         : reference::bilinear_warp(in, field.dx, field.dy);
    benchmark::DoNotOptimize(out.data().data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_DisarrayRender(benchmark::State& state) {
  const Image in = noise_image(256, 1, 8);
  const eidolon::DisarrayPlan plan(in, 0.3, 10.0, 9);
  for (auto _ : state) {
    Image out = plan.render(static_cast<double>(state.range(0)));
    benchmark::DoNotOptimize(out.data().data());
  }
}

}  // namespace

BENCHMARK(BM_Luma<false>)->Arg(256)->Arg(1024);
BENCHMARK(BM_Luma<true>)->Arg(256)->Arg(1024);
BENCHMARK(BM_Affine<false>)->Arg(256)->Arg(1024);
BENCHMARK(BM_Affine<true>)->Arg(256)->Arg(1024);
BENCHMARK(BM_UniformNoise<false>)->Arg(256)->Arg(1024);
BENCHMARK(BM_UniformNoise<true>)->Arg(256)->Arg(1024);
BENCHMARK(BM_GaussianBlur<false>)->Arg(2)->Arg(16);
BENCHMARK(BM_GaussianBlur<true>)->Arg(2)->Arg(16);
BENCHMARK(BM_BilinearWarp<false>)->Arg(256);
BENCHMARK(BM_BilinearWarp<true>)->Arg(256);
BENCHMARK(BM_DisarrayRender)->Arg(8)->Arg(128);
BENCHMARK_MAIN();
