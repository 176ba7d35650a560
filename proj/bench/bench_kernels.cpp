// Serial reference kernels against their OpenMP counterparts. The second benchmark
// argument selects the path: 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "omninav/kernels.hpp"
#include "omninav/localization.hpp"
#include "omninav/mapgen.hpp"
#include "omninav/scenes.hpp"

using namespace omninav;

namespace {

Execution exec_of(const benchmark::State& state) {
  return state.range(1) == 0 ? Execution::Serial : Execution::Parallel;
}

const PointCloud& lab_cloud(std::size_t n) {
  static std::map<std::size_t, PointCloud> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, scenes::floor_plan_cloud(scenes::lab_floor_plan(), n, 3)).first;
  }
  return it->second;
}

void BM_Rasterize(benchmark::State& state) {
  const PointCloud& cloud = lab_cloud(static_cast<std::size_t>(state.range(0)));
  const kernels::RasterFrame frame{0.0, 0.0, 0.05, 400, 300};
  std::vector<std::uint8_t> out(400 * 300);
  for (auto _ : state) {
    std::fill(out.begin(), out.end(), 0);
    kernels::rasterize_points(cloud.points, frame, out, exec_of(state));
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Rasterize)->ArgsProduct({{50000, 1000000}, {0, 1}})->Unit(benchmark::kMicrosecond);

void BM_DistanceTransform(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  std::mt19937_64 rng(5);
  std::bernoulli_distribution occ(0.02);
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(side) * side);
  for (auto& g : grid) {
    g = occ(rng) ? 1 : 0;
  }
  std::vector<double> out(grid.size());
  for (auto _ : state) {
    kernels::squared_distance_transform(grid, side, side, out, exec_of(state));
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(grid.size()));
}
BENCHMARK(BM_DistanceTransform)->ArgsProduct({{256, 1024}, {0, 1}})->Unit(benchmark::kMicrosecond);

void BM_ScorePoses(benchmark::State& state) {
  const scenes::Scene scene = scenes::tour_scene();
  const localization::DistanceField field(scene.nav_map, 2.0);
  const kernels::FieldView view = field.view();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ux(0.5, 13.5);
  std::uniform_real_distribution<double> uy(0.5, 7.5);
  std::uniform_real_distribution<double> ua(-kPi, kPi);
  std::vector<Pose2D> poses;
  for (long i = 0; i < state.range(0); ++i) {
    poses.emplace_back(ux(rng), uy(rng), ua(rng));
  }
  std::vector<kernels::BodyBeam> beams;
  for (int i = 0; i < 60; ++i) {
    const double a = -2.0 + 4.0 * i / 59.0;
    beams.push_back({std::cos(a), std::sin(a), 1.5});
  }
  const kernels::BeamModel model{0.95, 0.05, 0.1, 4.0};
  std::vector<double> out(poses.size());
  for (auto _ : state) {
    kernels::score_poses(poses, beams, view, model, out, exec_of(state));
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScorePoses)->ArgsProduct({{500, 5000}, {0, 1}})->Unit(benchmark::kMicrosecond);

void BM_ExtractMap(benchmark::State& state) {
  const PointCloud& cloud = lab_cloud(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    OccupancyGrid g = mapgen::extract_map(cloud, mapgen::MapGenConfig{}, nullptr, exec_of(state));
    benchmark::DoNotOptimize(g.cells.data());
  }
}
BENCHMARK(BM_ExtractMap)->ArgsProduct({{50000}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
