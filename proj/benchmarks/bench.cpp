#include <benchmark/benchmark.h>

#include "raritynet/affemonet.hpp"
#include "raritynet/ops.hpp"
#include "raritynet/rarity.hpp"

using namespace raritynet;

namespace {

GrayImage bench_image(int side) {
    Rng rng(123);
    GrayImage img(side, side);
    for (double& v : img.data) v = rng.uniform(0.0, 255.0);
    return img;
}

void BM_EncodeRarity(benchmark::State& state) {
    GrayImage img = bench_image(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        RarityResponse resp = encode_rarity(img, {});
        benchmark::DoNotOptimize(resp.maps[0].data());
    }
    state.SetItemsProcessed(state.iterations() * img.width * img.height);
}
BENCHMARK(BM_EncodeRarity)->Arg(64)->Arg(120)->Arg(256);

void BM_BlockHistograms(benchmark::State& state) {
    RarityResponse resp = encode_rarity(bench_image(120), {});
    for (auto _ : state) {
        FeatureVector fv = block_histograms(resp, 4);
        benchmark::DoNotOptimize(fv.values.data());
    }
}
BENCHMARK(BM_BlockHistograms);

void BM_Conv2d(benchmark::State& state) {
    int side = static_cast<int>(state.range(0));
    int kernel = static_cast<int>(state.range(1));
    Rng rng(7);
    Tensor in({side, side, 32});
    Tensor w({kernel, kernel, 32, 32});
    Tensor b({32});
    for (double& v : in.data) v = rng.uniform(-1.0, 1.0);
    for (double& v : w.data) v = rng.uniform(-1.0, 1.0);

    NodePtr x = make_constant(in), wp = make_constant(w), bp = make_constant(b);
    ConvSpec spec{kernel, 32, 32, 2};
    for (auto _ : state) {
        NodePtr out = conv2d(x, wp, bp, spec);
        benchmark::DoNotOptimize(out->value.data.data());
    }
}
BENCHMARK(BM_Conv2d)->Args({30, 3})->Args({30, 7})->Args({60, 3});

void BM_ForwardPass(benchmark::State& state) {
    NetConfig cfg;
    cfg.input_size = static_cast<int>(state.range(0));
    Model model = build(cfg);
    GrayImage img = bench_image(cfg.input_size);
    for (auto _ : state) {
        Tensor logits = forward(model, img);
        benchmark::DoNotOptimize(logits.data.data());
    }
}
BENCHMARK(BM_ForwardPass)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
    NetConfig cfg;
    cfg.input_size = 24;
    cfg.num_classes = 4;
    Model model = build(cfg);
    std::vector<std::pair<GrayImage, int>> batch;
    for (int k = 0; k < 4; ++k) batch.push_back({bench_image(24), k});
    for (auto _ : state) benchmark::DoNotOptimize(train_step(model, batch));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
