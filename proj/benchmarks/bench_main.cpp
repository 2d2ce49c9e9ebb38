#include <benchmark/benchmark.h>

#include <random>

#include "cardlv/image.hpp"
#include "cardlv/signed_distance.hpp"

namespace {

cardlv::Image random_image(int h, int w, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    cardlv::Image img(h, w);
    for (double& v : img.data) v = dist(rng);
    return img;
}

void BM_Conv2dValid64x11(benchmark::State& state) {
    const cardlv::Image img = random_image(64, 64, 1);
    const cardlv::Image ker = random_image(11, 11, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cardlv::conv2d_valid(img, ker, 0.1));
    }
}
BENCHMARK(BM_Conv2dValid64x11);

void BM_AvgPool54w6(benchmark::State& state) {
    const cardlv::Image m = random_image(54, 54, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cardlv::avg_pool(m, 6));
    }
}
BENCHMARK(BM_AvgPool54w6);

void BM_SignedDistance100(benchmark::State& state) {
    cardlv::BinaryMask mask(100, 100);
    for (int r = 0; r < 100; ++r)
        for (int c = 0; c < 100; ++c)
            if ((r - 50) * (r - 50) + (c - 50) * (c - 50) <= 900) mask.at(r, c) = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cardlv::signed_distance(mask));
    }
}
BENCHMARK(BM_SignedDistance100);

} // namespace

BENCHMARK_MAIN();
