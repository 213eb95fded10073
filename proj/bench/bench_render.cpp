#include "burrsim/iso/render.hpp"

#include "scenes.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace burrsim;

namespace {

const LabeledVolume& sphere()
{
    static const LabeledVolume vol = test::sphere_volume(96, 0.35);
    return vol;
}

const OrthoCamera kCamera{Vec3{48, 48, 150}, Vec3{0.1, -0.05, -1}, Vec3{0, 1, 0}, 100.0, 100.0};

std::vector<Vec3> surface_points(std::size_t n)
{
    std::mt19937 rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Vec3> pts(n);
    for (auto& p : pts) {
        p = Vec3{0.5, 0.5, 0.5} + 0.35 * normalized(Vec3{g(rng), g(rng), g(rng)});
    }
    return pts;
}

void render(benchmark::State& state, bool parallel)
{
    const auto side = static_cast<std::uint32_t>(state.range(0));
    RaycastParams params;
    params.kernel_n = static_cast<int>(state.range(1));
    for (auto _ : state) {
        auto maps = parallel ? render_ortho_maps(sphere(), kCamera, side, side, params)
                             : render_ortho_maps_serial(sphere(), kCamera, side, side, params);
        benchmark::DoNotOptimize(maps.depth_mm.data());
    }
    state.SetItemsProcessed(state.iterations() * side * side);
}

void normals(benchmark::State& state, bool parallel)
{
    const FieldView field(sphere());
    const auto pts = surface_points(static_cast<std::size_t>(state.range(0)));
    const SmoothingKernel kernel = SmoothingKernel::make(static_cast<int>(state.range(1)), sphere().dims());
    for (auto _ : state) {
        auto out = parallel ? smoothed_normals(field, pts, kernel) : smoothed_normals_serial(field, pts, kernel);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pts.size()));
}

void BM_RenderSerial(benchmark::State& s) { render(s, false); }
void BM_RenderOpenMP(benchmark::State& s) { render(s, true); }
void BM_NormalsSerial(benchmark::State& s) { normals(s, false); }
void BM_NormalsOpenMP(benchmark::State& s) { normals(s, true); }

} // namespace

BENCHMARK(BM_RenderSerial)->Args({128, 1})->Args({128, 3})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderOpenMP)->Args({128, 1})->Args({128, 3})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NormalsSerial)->Args({20000, 1})->Args({20000, 3})->Args({20000, 5})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NormalsOpenMP)->Args({20000, 1})->Args({20000, 3})->Args({20000, 5})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
