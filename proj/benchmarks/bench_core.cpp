#include <benchmark/benchmark.h>

#include <random>

#include "lstmctl/mpc.hpp"
#include "lstmctl/observer.hpp"
#include "lstmctl/plant.hpp"
#include "lstmctl/serialization.hpp"
#include "lstmctl/stability.hpp"
#include "lstmctl/trainer.hpp"

using namespace lstmctl;

namespace {

const ModelBundle& model() {
    static const ModelBundle mb = load_model(LSTMCTL_BENCH_DATA "/ph_model.json");
    return mb;
}

MpcConfig controller(double ph) {
    const ModelBundle& mb = model();
    const Gain2x2 A = certify(mb.params, mb.box).delta_iss.matrix;
    return make_mpc_config(mb.params, A, 10, 1.0, 5.0, mb.box, find_equilibrium(mb.params, mb.box, mb.scalers.y.normalize(ph)));
}

}  // namespace

static void BM_LstmStep(benchmark::State& st) {
    const LstmParams p = init_params(static_cast<std::size_t>(st.range(0)), 1, 1, 0.3, 1);
    LstmState s = LstmState::zeros(p.n_x);
    const double u[1] = {0.3};
    for (auto _ : st) {
        s = step(p, s, u);
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_LstmStep)->Arg(7)->Arg(32);

static void BM_ObserverStep(benchmark::State& st) {
    const ModelBundle& mb = model();
    LstmState s = LstmState::zeros(mb.params.n_x);
    const double u[1] = {0.3}, y[1] = {0.1};
    for (auto _ : st) {
        s = observer_step(mb.params, *mb.observer, s, u, y);
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_ObserverStep);

static void BM_Certify(benchmark::State& st) {
    const ModelBundle& mb = model();
    for (auto _ : st) benchmark::DoNotOptimize(certify(mb.params, mb.box));
}
BENCHMARK(BM_Certify);

static void BM_OcpGradient(benchmark::State& st) {
    const MpcConfig cfg = controller(7.5);
    const LstmState chi0 = controller(6.5).equilibrium.chi_bar;
    const Vector U(static_cast<std::size_t>(cfg.horizon), 0.1);
    Vector g;
    for (auto _ : st) benchmark::DoNotOptimize(ocp_cost_gradient(model().params, cfg, chi0, U, g));
}
BENCHMARK(BM_OcpGradient);

// Cold solve from the previous equilibrium, the worst case after a setpoint change.
static void BM_SolveOcp(benchmark::State& st) {
    const MpcConfig cfg = controller(7.5);
    const LstmState chi0 = controller(6.5).equilibrium.chi_bar;
    for (auto _ : st) benchmark::DoNotOptimize(solve_ocp(model().params, cfg, chi0));
    st.SetLabel("N = 10");
}
BENCHMARK(BM_SolveOcp)->Unit(benchmark::kMillisecond);

static void BM_PlantIntegrateStep(benchmark::State& st) {
    const PlantParams p;
    PlantState s = PlantState::nominal();
    for (auto _ : st) {
        s = integrate_step(p, s, kNominalQ3, p.q2, 10.0);
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_PlantIntegrateStep);

static void BM_PhOutput(benchmark::State& st) {
    const PlantParams p;
    const PlantState s = PlantState::nominal();
    for (auto _ : st) benchmark::DoNotOptimize(ph_output(p, s));
}
BENCHMARK(BM_PhOutput);

static void BM_MseGradient(benchmark::State& st) {
    const LstmParams p = init_params(7, 1, 1, 0.1, 1);
    Experiment e;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int k = 0; k < 2000; ++k) {
        e.u.push_back(d(rng));
        e.y.push_back(d(rng));
    }
    for (auto _ : st) benchmark::DoNotOptimize(mse_gradient(p, e, 50));
    st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations()) * 2000);
}
BENCHMARK(BM_MseGradient)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
