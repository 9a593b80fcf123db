#include <benchmark/benchmark.h>

#include "edlm/model.hpp"
#include "edlm/rng.hpp"

using namespace edlm;

namespace {

TensorF random_tensor(std::vector<int> shape, std::uint64_t seed) {
    Rng rng(seed);
    TensorF t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.real01());
    return t;
}

void BM_conv2d_forward(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const int channels = static_cast<int>(state.range(1));
    const TensorF input = random_tensor({side, side, channels}, 1);
    const TensorF kernels = random_tensor({3, 3, channels, 32}, 2);
    const TensorF bias = random_tensor({32}, 3);
    const ConvGeometry geom{3, 3, 1, 1};
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv2d(input, kernels, bias, geom));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(side) * side * 32 *
                            9 * channels);
}
BENCHMARK(BM_conv2d_forward)->Args({64, 3})->Args({32, 32})->Args({64, 32});

void BM_conv2d_backward(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const TensorF input = random_tensor({side, side, 32}, 1);
    const TensorF kernels = random_tensor({3, 3, 32, 32}, 2);
    const TensorF bias = random_tensor({32}, 3);
    const ConvGeometry geom{3, 3, 1, 1};
    const TensorF upstream = random_tensor({side, side, 32}, 4);
    TensorF gi, gk, gb;
    for (auto _ : state) {
        conv2d_backward(input, kernels, geom, upstream, gi, gk, gb);
        benchmark::DoNotOptimize(gi);
    }
}
BENCHMARK(BM_conv2d_backward)->Arg(32)->Arg(64);

void BM_maxpool2(benchmark::State& state) {
    const TensorF input = random_tensor({64, 64, 32}, 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(maxpool2(input));
    }
}
BENCHMARK(BM_maxpool2);

void BM_softmax(benchmark::State& state) {
    const TensorF logits = random_tensor({static_cast<int>(state.range(0))}, 6);
    for (auto _ : state) {
        benchmark::DoNotOptimize(softmax(logits));
    }
}
BENCHMARK(BM_softmax)->Arg(5)->Arg(4096);

void BM_compact_forward(benchmark::State& state) {
    const NetworkSpec spec = edlm_compact_spec({64, 64, 3}, 5);
    const auto params = init_parameters<float>(spec, 42);
    const TensorF input = random_tensor({64, 64, 3}, 7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(spec, params, input));
    }
}
BENCHMARK(BM_compact_forward);

void BM_compact_train_step(benchmark::State& state) {
    const NetworkSpec spec = edlm_compact_spec({64, 64, 3}, 5);
    auto params = init_parameters<float>(spec, 42);
    const TensorF input = random_tensor({64, 64, 3}, 7);
    TensorF label({5});
    label(2) = 1.0F;
    for (auto _ : state) {
        Tape<float> tape;
        forward(spec, params, input, &tape);
        auto grads = backward_from_loss(spec, params, tape, label, LossForm::binary_sum);
        benchmark::DoNotOptimize(grads);
    }
}
BENCHMARK(BM_compact_train_step);

}  // namespace

BENCHMARK_MAIN();
