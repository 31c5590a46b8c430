#include <benchmark/benchmark.h>

#include <random>

#include "bsm/bilateral_grid.hpp"
#include "bsm/codebook.hpp"
#include "bsm/features.hpp"
#include "bsm/meanfield.hpp"
#include "bsm/synth.hpp"

namespace {

using namespace bsm;

SynthSample sample(int size) {
  SynthParams sp;
  sp.width = size;
  sp.height = size;
  sp.object_radius = size / 3;
  return generate_synthetic(sp, 1, 3).front();
}

UnaryField signed_unary(const SynthSample& s) {
  std::vector<double> fg(s.image.pixel_count()), bg(fg.size());
  for (std::size_t i = 0; i < fg.size(); ++i) {
    fg[i] = s.mask.data()[i] ? -0.5 : 0.5;
    bg[i] = -fg[i];
  }
  const int w = s.image.width(), h = s.image.height();
  return UnaryField::from_energies(ScalarField(w, h, fg), ScalarField(w, h, bg));
}

void BM_HarrisLaplace(benchmark::State& state) {
  const GrayImage img = to_gray(sample(static_cast<int>(state.range(0))).image);
  for (auto _ : state) benchmark::DoNotOptimize(detect_harris_laplace(img, {}));
}
BENCHMARK(BM_HarrisLaplace)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Sift(benchmark::State& state) {
  const GrayImage img = to_gray(sample(128).image);
  const Keypoint kp{64, 64, 4.0, 0};
  for (auto _ : state) benchmark::DoNotOptimize(compute_sift(img, kp, {}));
}
BENCHMARK(BM_Sift);

void BM_Cluster(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0, 1);
  std::vector<SiftDescriptor> descs(state.range(0));
  for (SiftDescriptor& d : descs) {
    for (double& v : d.bins) v = std::abs(noise(rng));
    const double n = d.norm();
    for (double& v : d.bins) v /= n;
  }
  for (auto _ : state) benchmark::DoNotOptimize(agglomerative_cluster(descs, 0.7));
}
BENCHMARK(BM_Cluster)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_MeanField(benchmark::State& state) {
  const SynthSample s = sample(static_cast<int>(state.range(0)));
  const UnaryField u = signed_unary(s);
  const InferenceMode mode = state.range(1) ? InferenceMode::exact : InferenceMode::fast;
  for (auto _ : state) benchmark::DoNotOptimize(meanfield_infer(u, s.image, {}, mode));
}
BENCHMARK(BM_MeanField)->Args({64, 1})->Args({64, 0})->Args({256, 0})->Unit(benchmark::kMillisecond);

void BM_GridFilter(benchmark::State& state) {
  const SynthSample s = sample(static_cast<int>(state.range(0)));
  const int w = s.image.width(), h = s.image.height();
  std::vector<double> features;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint8_t* c = &s.image.data()[3 * (static_cast<std::size_t>(y) * w + x)];
      features.insert(features.end(), {x / 40.0, y / 40.0, c[0] / 13.0, c[1] / 13.0, c[2] / 13.0});
    }
  }
  const BilateralGrid grid(features, 5);
  std::vector<double> in(static_cast<std::size_t>(w) * h, 1.0), out(in.size());
  for (auto _ : state) {
    grid.filter(in, 1, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_GridFilter)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
