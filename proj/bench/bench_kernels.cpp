#include <benchmark/benchmark.h>

#include "strokeforge/kernels.hpp"
#include "strokeforge/rng.hpp"

using namespace strokeforge;

namespace {

RasterImage noise_image(int side) {
    Rng rng(42);
    RasterImage img(side, side, 3);
    for (auto& v : img.data()) v = rng.uniform();
    return img;
}

ScalarField noise_field(int side) {
    Rng rng(43);
    ScalarField f(side, side);
    for (auto& v : f.data()) v = rng.uniform();
    return f;
}

std::vector<Point2> seeds(int side, int n) {
    Rng rng(44);
    std::vector<Point2> s(n);
    for (auto& p : s) p = {rng.uniform() * side, rng.uniform() * side};
    return s;
}

template <bool Parallel>
void BM_convolve(benchmark::State& state) {
    const auto f = noise_field(int(state.range(0)));
    const auto k = box_kernel(7);
    for (auto _ : state)
        benchmark::DoNotOptimize(Parallel ? convolve2d(f, k) : serial::convolve2d(f, k));
    state.SetItemsProcessed(state.iterations() * f.width() * f.height());
}

template <bool Parallel>
void BM_sobel(benchmark::State& state) {
    const auto f = noise_field(int(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(Parallel ? sobel_gradients(f) : serial::sobel_gradients(f));
    state.SetItemsProcessed(state.iterations() * f.width() * f.height());
}

template <bool Parallel>
void BM_gaussian_blur(benchmark::State& state) {
    const auto img = noise_image(int(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(Parallel ? gaussian_blur(img, 4.0) : serial::gaussian_blur(img, 4.0));
    state.SetItemsProcessed(state.iterations() * img.width() * img.height());
}

template <bool Parallel>
void BM_bilateral(benchmark::State& state) {
    const auto img = noise_image(int(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(Parallel ? bilateral_filter(img, 2.0, 0.1) : serial::bilateral_filter(img, 2.0, 0.1));
    state.SetItemsProcessed(state.iterations() * img.width() * img.height());
}

template <bool Parallel>
void BM_label_nearest(benchmark::State& state) {
    const int side = int(state.range(0));
    const auto s = seeds(side, 256);
    for (auto _ : state)
        benchmark::DoNotOptimize(Parallel ? label_nearest(side, side, s) : serial::label_nearest(side, side, s));
    state.SetItemsProcessed(state.iterations() * side * side);
}

template <bool Parallel>
void BM_cell_errors(benchmark::State& state) {
    const int side = int(state.range(0));
    const auto a = noise_image(side);
    auto b = a;
    for (auto& v : b.data()) v = 1.0 - v;
    const CellGrid grid{side, side, 8};
    for (auto _ : state)
        benchmark::DoNotOptimize(Parallel ? cell_errors(a, b, grid) : serial::cell_errors(a, b, grid));
    state.SetItemsProcessed(state.iterations() * side * side);
}

}  // namespace

#define SF_PAIR(fn)                                                          \
    BENCHMARK(fn<false>)->Name(#fn "/serial")->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond); \
    BENCHMARK(fn<true>)->Name(#fn "/parallel")->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond)

SF_PAIR(BM_convolve);
SF_PAIR(BM_sobel);
SF_PAIR(BM_gaussian_blur);
SF_PAIR(BM_bilateral);
SF_PAIR(BM_label_nearest);
SF_PAIR(BM_cell_errors);

BENCHMARK_MAIN();
