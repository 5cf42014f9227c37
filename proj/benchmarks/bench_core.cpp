#include <benchmark/benchmark.h>

#include "padicdiff/analysis.hpp"
#include "padicdiff/model_io.hpp"
#include "padicdiff/spectral.hpp"
#include "padicdiff/wavelets.hpp"

using namespace padicdiff;

namespace {

ManifoldModel ball_model(long long p, int n, int m) {
    BuiltinOptions opts;
    opts.p = p;
    opts.n = n;
    opts.m = m;
    return builtin_model("single_ball", opts);
}

void BM_assemble_vt(benchmark::State& state) {
    const ManifoldModel model = ball_model(2, 1, static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble_vt(model, 1.0));
    }
    state.SetLabel(std::to_string(model.cell_count()) + " cells");
}
BENCHMARK(BM_assemble_vt)->Arg(4)->Arg(6)->Arg(8);

void BM_assemble_knn(benchmark::State& state) {
    BuiltinOptions opts;
    opts.m = static_cast<int>(state.range(0));
    const ManifoldModel model = builtin_model("p1_q2", opts);
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble_knn(model, 1.0, 1));
    }
    state.SetLabel(std::to_string(model.cell_count()) + " cells");
}
BENCHMARK(BM_assemble_knn)->Arg(3)->Arg(5)->Arg(7);

void BM_jacobi_spectrum(benchmark::State& state) {
    const ManifoldModel model = ball_model(2, 1, static_cast<int>(state.range(0)));
    const OperatorMatrix L = assemble_vt(model, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(spectrum(L));
    }
    state.SetLabel(std::to_string(model.cell_count()) + " cells");
}
BENCHMARK(BM_jacobi_spectrum)->Arg(5)->Arg(6)->Arg(7);

void BM_wavelet_residuals(benchmark::State& state) {
    const ManifoldModel model = ball_model(2, 1, static_cast<int>(state.range(0)));
    const OperatorMatrix L = assemble_vt(model, 1.0);
    const auto wavelets = enumerate_wavelets(model);
    for (auto _ : state) {
        double worst = 0.0;
        for (const auto& idx : wavelets) {
            const auto w = wavelet_vector(model, idx);
            worst = std::max(worst, rayleigh_residual(L, w.values).residual);
        }
        benchmark::DoNotOptimize(worst);
    }
    state.SetLabel(std::to_string(wavelets.size()) + " wavelets");
}
BENCHMARK(BM_wavelet_residuals)->Arg(5)->Arg(7);

void BM_dirichlet_solve(benchmark::State& state) {
    const ManifoldModel model = ball_model(2, 1, static_cast<int>(state.range(0)));
    DirichletProblem problem;
    problem.model = &model;
    problem.alpha = 1.0;
    problem.k = 1;
    const auto range = model.prefix_cell_range(0, BallAddress{{0}});
    for (std::uint64_t o = range.first; o < range.second; ++o) problem.omega.push_back({0, o});
    problem.f.assign(problem.omega.size(), 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_dirichlet(problem, 20, 1));
    }
    state.SetLabel(std::to_string(problem.omega.size()) + " interior cells");
}
BENCHMARK(BM_dirichlet_solve)->Arg(4)->Arg(6);

} // namespace

BENCHMARK_MAIN();
