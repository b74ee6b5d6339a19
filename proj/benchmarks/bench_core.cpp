#include <fbp/solvers.hpp>

#include <benchmark/benchmark.h>

#include <cmath>

namespace {

fbp::Grid cube(int n) { return fbp::Grid(fbp::BoxDomain::cube(3, -1.0, 1.0), n); }

void BM_SubLaplacian(benchmark::State& state) {
    const fbp::Grid g = cube(static_cast<int>(state.range(0)));
    const fbp::HorizontalOperators ops(fbp::heisenberg1(), g);
    const fbp::ScalarField u = fbp::trial_bump(g);
    fbp::ScalarField out(g.size());
    for (auto _ : state) {
        ops.sub_laplacian(u.span(), out.span());
        benchmark::DoNotOptimize(out.values().data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(g.size()));
}
BENCHMARK(BM_SubLaplacian)->Arg(17)->Arg(33)->Arg(65);

void BM_EnergyAndResidual(benchmark::State& state) {
    const fbp::Grid g = cube(static_cast<int>(state.range(0)));
    const fbp::HorizontalOperators ops(fbp::heisenberg1(), g);
    const fbp::SmoothedEnergy e(ops, fbp::NonlinearitySpec::constant(1, 1), 50.0, 0.1);
    const fbp::ScalarField u = 1.8 * fbp::trial_bump(g);
    for (auto _ : state) {
        benchmark::DoNotOptimize(e.energy(u).total);
        benchmark::DoNotOptimize(e.residual(u).values().data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(g.size()));
}
BENCHMARK(BM_EnergyAndResidual)->Arg(17)->Arg(33);

// -L u = f with zero boundary values, IC(0)-preconditioned CG.
void BM_LinearSolve(benchmark::State& state) {
    const fbp::Grid g = cube(static_cast<int>(state.range(0)));
    const fbp::HorizontalOperators ops(fbp::heisenberg1(), g);
    const fbp::ScalarField rhs = fbp::trial_bump(g);
    fbp::SolveConfig cfg;
    cfg.cg_tol = 1e-10;
    fbp::LinearSolveInfo info;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fbp::solve_linear(rhs, ops, cfg, &info).values().data());
    }
    state.counters["cg_iterations"] = info.iterations;
}
BENCHMARK(BM_LinearSolve)->Arg(17)->Arg(33)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
