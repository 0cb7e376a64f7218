#include <cmath>
#include <numbers>

#include <benchmark/benchmark.h>

#include "dipole/dns.hpp"
#include "dipole/energy_diag.hpp"
#include "dipole/expansion.hpp"
#include "dipole/gaussian_base.hpp"
#include "dipole/operators.hpp"

using namespace dipole;

namespace {

const ExpansionBundle& bundle4() {
    static const ExpansionBundle b = build_bundle(GridSpec{}, 4);
    return b;
}

void BM_BuildBundle(benchmark::State& st) {
    const GridSpec g;
    for (auto _ : st) benchmark::DoNotOptimize(build_bundle(g, static_cast<int>(st.range(0))));
}
BENCHMARK(BM_BuildBundle)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ApplyLambda(benchmark::State& st) {
    const auto& w = bundle4().omega_E[4];
    for (auto _ : st) benchmark::DoNotOptimize(apply_Lambda(w));
}
BENCHMARK(BM_ApplyLambda)->Unit(benchmark::kMicrosecond);

void BM_WeightTable(benchmark::State& st) {
    const auto f = functional_relation(bundle4());
    for (auto _ : st) benchmark::DoNotOptimize(make_weight_table(bundle4(), f, 0.05, {}));
}
BENCHMARK(BM_WeightTable)->Unit(benchmark::kMillisecond);

void BM_SpectralStep(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    SpectralSolver s(n, 16.0, DipoleParams{}.nu);
    Samples2D w(s.grid());
    const auto& g = s.grid();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) w.at(i, j) = gauss_G(std::hypot(g.x(i) - 1.0, g.y(j))) - gauss_G(std::hypot(g.x(i) + 1.0, g.y(j)));
    s.set_vorticity(w);
    for (auto _ : st) s.step(1e-3);
}
BENCHMARK(BM_SpectralStep)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
