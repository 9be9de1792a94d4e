#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

#include "bodyimage/kernels.hpp"
#include "bodyimage/network.hpp"
#include "bodyimage/rng.hpp"
#include "bodyimage/trainer.hpp"

using namespace bodyimage;
namespace k = bodyimage::kernels;

namespace {

std::vector<float> random_values(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

// Sizes of the first and last upsample stage of the default network.
k::ConvShape shape_for(int stage) {
  return stage == 0 ? k::ConvShape{3, 4, 32, 32} : k::ConvShape{12, 16, 32, 32};
}

template <bool Fast>
void BM_UpsampleConvForward(benchmark::State& state) {
  const auto s = shape_for(static_cast<int>(state.range(0)));
  const auto x = random_values(std::size_t(s.height) * s.width * s.in_channels, 1);
  const auto w = random_values(9u * s.in_channels * s.out_channels, 2);
  const auto b = random_values(s.out_channels, 3);
  std::vector<float> y(4u * s.height * s.width * s.out_channels);
  for (auto _ : state) {
    if constexpr (Fast)
      k::fast::upsample_conv3x3_forward<float>(x, w, b, y, s);
    else
      k::reference::upsample_conv3x3_forward<float>(x, w, b, y, s);
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Fast>
void BM_UpsampleConvBackward(benchmark::State& state) {
  const auto s = shape_for(static_cast<int>(state.range(0)));
  const auto x = random_values(std::size_t(s.height) * s.width * s.in_channels, 1);
  const auto w = random_values(9u * s.in_channels * s.out_channels, 2);
  const auto dy = random_values(4u * s.height * s.width * s.out_channels, 3);
  std::vector<float> dx(x.size()), dw(w.size()), db(s.out_channels);
  for (auto _ : state) {
    if constexpr (Fast)
      k::fast::upsample_conv3x3_backward<float>(x, w, dy, dx, dw, db, s);
    else
      k::reference::upsample_conv3x3_backward<float>(x, w, dy, dx, dw, db, s);
    benchmark::DoNotOptimize(dw.data());
  }
}

template <bool Fast>
void BM_ConvForward(benchmark::State& state) {
  const k::ConvShape s{24, 32, 32, 16};
  const auto x = random_values(std::size_t(s.height) * s.width * s.in_channels, 1);
  const auto w = random_values(9u * s.in_channels * s.out_channels, 2);
  const auto b = random_values(s.out_channels, 3);
  std::vector<float> y(std::size_t(s.height) * s.width * s.out_channels);
  for (auto _ : state) {
    if constexpr (Fast)
      k::fast::conv3x3_forward<float>(x, w, b, y, s);
    else
      k::reference::conv3x3_forward<float>(x, w, b, y, s);
    benchmark::DoNotOptimize(y.data());
  }
}

// One training batch of the default network; range(0) is the thread count.
void BM_BatchGradients(benchmark::State& state) {
  const model::Architecture arch;
  const auto net = model::build_network<float>(arch, 1);
  Rng rng(2);
  std::vector<model::Example<float>> examples(100);
  for (auto& e : examples) {
    e.motor = Tensor<float>(Shape{arch.motor_dim});
    for (auto& v : e.motor.storage()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    e.target = Tensor<float>(Shape{24, 32, 3});
    for (auto& v : e.target.storage()) v = static_cast<float>(rng.uniform());
  }
  std::vector<const model::Example<float>*> batch;
  for (const auto& e : examples) batch.push_back(&e);

  const int saved = omp_get_max_threads();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto r = model::batch_gradients(net, batch, 0.5, true);
    benchmark::DoNotOptimize(r.loss_total);
  }
  omp_set_num_threads(saved);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}

}  // namespace

BENCHMARK(BM_UpsampleConvForward<false>)->Name("upsample_conv_fwd/reference")->Arg(0)->Arg(1);
BENCHMARK(BM_UpsampleConvForward<true>)->Name("upsample_conv_fwd/fast")->Arg(0)->Arg(1);
BENCHMARK(BM_UpsampleConvBackward<false>)->Name("upsample_conv_bwd/reference")->Arg(0)->Arg(1);
BENCHMARK(BM_UpsampleConvBackward<true>)->Name("upsample_conv_bwd/fast")->Arg(0)->Arg(1);
BENCHMARK(BM_ConvForward<false>)->Name("conv_fwd_24x32x32x16/reference");
BENCHMARK(BM_ConvForward<true>)->Name("conv_fwd_24x32x32x16/fast");
BENCHMARK(BM_BatchGradients)->Name("batch_gradients_100")->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
