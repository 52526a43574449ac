#include <benchmark/benchmark.h>

#include <cmath>
#include <variant>

#include "carpetlab/carpet_io.hpp"
#include "carpetlab/catalog.hpp"
#include "carpetlab/dimension.hpp"
#include "carpetlab/projection.hpp"
#include "carpetlab/separated.hpp"
#include "carpetlab/symbolic.hpp"
#include "carpetlab/treecert.hpp"

using namespace carpetlab;

namespace {

GLCarpet sample_gl() { return std::get<GLCarpet>(load_carpet(CARPETLAB_DATA_DIR "/gl_two_rows.json")); }

void BM_SolveT(benchmark::State& state) {
  auto carpet = sample_gl();
  ProbVector p({0.6, 0.4});
  for (auto _ : state) benchmark::DoNotOptimize(solve_t(p, carpet));
}
BENCHMARK(BM_SolveT);

void BM_GLDimension(benchmark::State& state) {
  auto carpet = sample_gl();
  for (auto _ : state) benchmark::DoNotOptimize(gl_dimension(carpet).value);
}
BENCHMARK(BM_GLDimension)->Unit(benchmark::kMillisecond);

void BM_CoverBoxes(benchmark::State& state) {
  auto maps = as_maps(catalog::cantor_product(Rational(1, 4), Rational(1, 3)));
  Rational delta(1, 1L << state.range(0));
  for (auto _ : state) {
    auto boxes = cover_boxes(maps, delta);
    benchmark::DoNotOptimize(boxes.data());
    state.counters["boxes"] = static_cast<double>(boxes.size());
  }
}
BENCHMARK(BM_CoverBoxes)->DenseRange(8, 14, 3)->Unit(benchmark::kMillisecond);

void BM_BoxCountProjection(benchmark::State& state) {
  auto maps = as_maps(catalog::cantor_product(Rational(1, 4), Rational(1, 4)));
  auto param = ProjectionParam::from_theta(std::atan(2.0) / 2, Rational(1, 4));
  double delta = std::ldexp(1.0, -static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(box_count_projection(maps, param, delta));
}
BENCHMARK(BM_BoxCountProjection)->DenseRange(8, 14, 3)->Unit(benchmark::kMillisecond);

void BM_MaxSeparated(benchmark::State& state) {
  auto maps = as_maps(catalog::uniform_grid(Rational(1, 9), Rational(1, 4), 3, 2));
  auto boxes = cover_boxes(maps, Rational(1, 1L << (2 * state.range(0))));
  double rho = std::ldexp(1.0, -2 * static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(max_separated_subfamily(boxes, 0.9, rho).size());
  state.counters["rects"] = static_cast<double>(boxes.size());
}
BENCHMARK(BM_MaxSeparated)->DenseRange(3, 6, 1)->Unit(benchmark::kMillisecond);

void BM_BuildTree(benchmark::State& state) {
  auto carpet = std::get<UniformFibreCarpet>(load_carpet(CARPETLAB_DATA_DIR "/uniform_third_half.json"));
  int k = static_cast<int>(state.range(0));
  auto schedule = rotation_schedule(carpet.a, carpet.b, k, 16);
  int j0 = choose_j0(schedule);
  AcceptAllOracle oracle(carpet.m, schedule.ell);
  for (auto _ : state) {
    auto tree = build_tree(carpet, 0.0, k, 0.04, j0 + 3, oracle);
    benchmark::DoNotOptimize(tree.levels.size());
  }
}
BENCHMARK(BM_BuildTree)->Arg(5)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
