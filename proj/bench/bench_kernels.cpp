#include <benchmark/benchmark.h>

#include <vector>

#include "lsrom/kernels.hpp"
#include "lsrom/merge.hpp"
#include "lsrom/rng.hpp"

namespace {

lsrom::Matrix uniform_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    lsrom::Rng rng(seed);
    lsrom::Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = lsrom::uniform01(rng);
    }
    return m;
}

template <bool Parallel>
void bm_nearest_center(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto points = uniform_matrix(n, 2, 1);
    const auto centers = uniform_matrix(100, 2, 2);
    std::vector<std::size_t> idx(n);
    std::vector<double> d(n);
    for (auto _ : state) {
        if constexpr (Parallel) lsrom::kernels::omp::nearest_center(points, centers, idx, d);
        else lsrom::kernels::serial::nearest_center(points, centers, idx, d);
        benchmark::DoNotOptimize(d.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

template <bool Parallel>
void bm_assigned_sqdist(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto points = uniform_matrix(n, 2, 1);
    const auto centers = uniform_matrix(100, 2, 2);
    std::vector<std::size_t> idx(n);
    std::vector<double> d(n);
    lsrom::kernels::serial::nearest_center(points, centers, idx, d);
    for (auto _ : state) {
        if constexpr (Parallel) lsrom::kernels::omp::assigned_sqdist(points, centers, idx, d);
        else lsrom::kernels::serial::assigned_sqdist(points, centers, idx, d);
        benchmark::DoNotOptimize(d.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

// Repeated assignment with slowly moving centers, as in Lloyd iterations.
void bm_bounded_assign(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto points = uniform_matrix(n, 2, 1);
    auto centers = uniform_matrix(100, 2, 2);
    std::vector<std::size_t> idx(n);
    std::vector<double> d(n);
    lsrom::kernels::BoundedAssigner assigner;
    assigner.assign(points, centers, idx, d);
    double step = 1e-4;
    for (auto _ : state) {
        centers(0, 0) += step;
        step = -step;
        assigner.assign(points, centers, idx, d);
        benchmark::DoNotOptimize(d.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

void bm_neighbor_table(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto search = state.range(1) == 0 ? lsrom::KnnSearch::exact : lsrom::KnnSearch::approximate;
    const auto points = uniform_matrix(n, 2, 3);
    for (auto _ : state) {
        lsrom::NeighborTable table(points, 10, search);
        benchmark::DoNotOptimize(table.neighbors(0).data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

}  // namespace

BENCHMARK(bm_nearest_center<false>)->Name("nearest_center/serial")->Arg(10000)->Arg(100000);
BENCHMARK(bm_nearest_center<true>)->Name("nearest_center/omp")->Arg(10000)->Arg(100000);
BENCHMARK(bm_assigned_sqdist<false>)->Name("assigned_sqdist/serial")->Arg(100000);
BENCHMARK(bm_assigned_sqdist<true>)->Name("assigned_sqdist/omp")->Arg(100000);
BENCHMARK(bm_bounded_assign)->Name("bounded_assign")->Arg(100000);
BENCHMARK(bm_neighbor_table)->Name("neighbor_table")->Args({20000, 0})->Args({20000, 1})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
