#include <vcdet/box.hpp>
#include <vcdet/mask_graph.hpp>
#include <vcdet/random.hpp>
#include <vcdet/rle.hpp>
#include <vcdet/synthetic.hpp>
#include <vcdet/voxel_hash.hpp>

#include <benchmark/benchmark.h>

using namespace vcdet;

namespace {

const Scene& bench_scene() {
  static const Scene scene = render_synthetic(three_cuboid_spec()).scene;
  return scene;
}

std::vector<Vec3> random_points(std::size_t n, std::uint64_t seed, double extent) {
  SplitMix64 rng(seed);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = Vec3(rng.uniform(0, extent), rng.uniform(0, extent), rng.uniform(0, extent));
  return pts;
}

void BM_BuildGraph(benchmark::State& state) {
  MergeConfig cfg;
  cfg.workers = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_graph(bench_scene(), cfg));
}
BENCHMARK(BM_BuildGraph)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_DetectClassAgnostic(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(detect_class_agnostic(bench_scene(), MergeConfig{}));
}
BENCHMARK(BM_DetectClassAgnostic)->Unit(benchmark::kMillisecond);

void BM_Containment(benchmark::State& state) {
  const auto container = random_points(static_cast<std::size_t>(state.range(0)), 1, 1.0);
  const auto containee = random_points(static_cast<std::size_t>(state.range(0)) / 4, 2, 1.0);
  const VoxelHash index(container, 0.04);
  for (auto _ : state) benchmark::DoNotOptimize(coverage_ratio(index, containee, 0.04));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * containee.size()));
}
BENCHMARK(BM_Containment)->Arg(10'000)->Arg(100'000);

void BM_Nms(benchmark::State& state) {
  SplitMix64 rng(3);
  std::vector<Box3D> boxes;
  std::vector<double> scores;
  for (int i = 0; i < state.range(0); ++i) {
    boxes.push_back({Vec3(rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 3)),
                     Vec3(rng.uniform(0.2, 2), rng.uniform(0.2, 2), rng.uniform(0.2, 2))});
    scores.push_back(rng.uniform());
  }
  for (auto _ : state) benchmark::DoNotOptimize(nms(boxes, scores, 0.5));
}
BENCHMARK(BM_Nms)->Arg(100)->Arg(1000);

void BM_RleDecode(benchmark::State& state) {
  Bitmap bm(640, 480);
  for (int v = 100; v < 380; ++v)
    for (int u = 150; u < 500; ++u) bm.set(u, v, ((u / 40) + (v / 30)) % 3 != 0);
  const RleMask rle = encode_rle(bm);
  for (auto _ : state) benchmark::DoNotOptimize(decode_rle(rle));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bm.bits.size()));
}
BENCHMARK(BM_RleDecode);

}  // namespace

BENCHMARK_MAIN();
