#include <benchmark/benchmark.h>

#include "photonlab/cae.hpp"
#include "photonlab/conv.hpp"
#include "photonlab/photon_sim.hpp"
#include "photonlab/rng.hpp"
#include "photonlab/synth.hpp"
#include "photonlab/tv.hpp"

using namespace photonlab;

namespace {

Tensor random_tensor(std::vector<int> shape, uint64_t seed) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (auto& v : t.values()) v = static_cast<float>(rng.uniform01() * 2 - 1);
  return t;
}

ConvLayer random_layer(int ci, int co, uint64_t seed) {
  ConvLayer layer(ci, co);
  Rng rng(seed);
  for (auto& v : layer.kernels.values()) v = static_cast<float>(rng.uniform01() * 2 - 1);
  return layer;
}

void BM_Conv2dForward(benchmark::State& state) {
  const Tensor input = random_tensor({1, 64, 28, 28}, 1);
  const ConvLayer layer = random_layer(64, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_same(input, layer));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Conv2dForward);

void BM_Conv2dBackward(benchmark::State& state) {
  const Tensor input = random_tensor({1, 64, 28, 28}, 3);
  const ConvLayer layer = random_layer(64, 64, 4);
  const Tensor grad = random_tensor({1, 64, 28, 28}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_backward(grad, input, layer));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Conv2dBackward);

void BM_MaxPool(benchmark::State& state) {
  const Tensor input = random_tensor({1, 64, 28, 28}, 6);
  for (auto _ : state) benchmark::DoNotOptimize(maxpool_2x2_ceil(input));
}
BENCHMARK(BM_MaxPool);

void BM_CaeInference(benchmark::State& state) {
  const CaeWeights weights = init_weights(build_architecture(7), 7);
  const Image frame = render_digit(3, 8);
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(cae_infer(weights, frame, jobs));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CaeInference)->Arg(1)->Arg(2);

void BM_CaeTrainStep(benchmark::State& state) {
  const CaeWeightsT<float> weights = init_weights(build_architecture(7), 9);
  const Image frame = render_digit(4, 10);
  const Tensor input = frame.as_tensor();
  const Tensor target = render_digit(4, 11).as_tensor();
  for (auto _ : state)
    benchmark::DoNotOptimize(cae_loss_and_gradients(weights, input, target));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CaeTrainStep);

void BM_TvSolveDefault(benchmark::State& state) {
  const Frame f = simulate_frame(render_digit(5, 12), CameraModel::paper_like(1.6), 13);
  const CountMap y = CountMap::from_frame(f);
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct_tv(y, TvConfig{}));
}
BENCHMARK(BM_TvSolveDefault);

void BM_TvProx(benchmark::State& state) {
  Rng rng(14);
  std::vector<double> v(784);
  for (auto& x : v) x = rng.uniform01();
  for (auto _ : state) benchmark::DoNotOptimize(tv_prox(v, 28, 28, 0.5, 40));
}
BENCHMARK(BM_TvProx);

void BM_PoissonSample(benchmark::State& state) {
  Rng rng(15);
  const double lambda = state.range(0) / 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(rng.poisson(lambda));
}
BENCHMARK(BM_PoissonSample)->Arg(16)->Arg(500);

void BM_SimulateFrame(benchmark::State& state) {
  const Image truth = render_digit(6, 16);
  const CameraModel cam = CameraModel::paper_like(1.6);
  uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_frame(truth, cam, ++seed));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SimulateFrame);

}  // namespace

BENCHMARK_MAIN();
