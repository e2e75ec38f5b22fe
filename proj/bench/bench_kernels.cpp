// Serial reference kernels against their OpenMP counterparts. The second
// benchmark argument selects the path: 0 serial, 1 parallel.
#include "qesn/forecast.hpp"
#include "qesn/kernels.hpp"
#include "qesn/random.hpp"
#include "qesn/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <algorithm>
#include <vector>

namespace {

using qesn::Exec;

Exec exec_of(const benchmark::State& state) { return state.range(1) ? Exec::parallel : Exec::serial; }

void BM_ReflectedKde(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    qesn::Rng rng(1);
    std::vector<double> x(n);
    for (auto& v : x) v = std::clamp(5.0 + std::exp(rng.normal(-0.7, 0.6)), 4.5, 11.0);
    std::sort(x.begin(), x.end());
    std::vector<double> grid(2048), out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = 4.5 + 6.5 * static_cast<double>(i) / (grid.size() - 1);
    for (auto _ : state) {
        qesn::kernels::reflected_kde_grid(x, 4.5, 11.0, 0.05, grid, out, exec_of(state));
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.size()));
}
BENCHMARK(BM_ReflectedKde)->ArgsProduct({{4000, 17520}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_Gram(benchmark::State& state) {
    const auto rows = state.range(0);
    qesn::Rng rng(2);
    const qesn::Matrix B = qesn::Matrix::NullaryExpr(rows, 241, [&] { return rng.normal(); });
    for (auto _ : state) {
        auto G = qesn::kernels::gram(B, exec_of(state));
        benchmark::DoNotOptimize(G.data());
    }
}
BENCHMARK(BM_Gram)->ArgsProduct({{2000, 4300}, {0, 1}})->Unit(benchmark::kMillisecond);

struct SimulationFixture {
    qesn::SynthResult data;
    qesn::FeatureFrame frame;
    std::vector<qesn::ModelFit> fits;

    SimulationFixture() {
        qesn::SynthSpec s;
        s.n_series = 2;
        s.T = 1500;
        s.reservoir.n_h = 40;
        data = qesn::generate(s);
        frame = data.panel.frame();
        qesn::FitSettings settings;
        settings.reservoir.n_h = 40;
        settings.K = 8;
        settings.mcmc.n_iter = 200;
        settings.mcmc.n_burn = 100;
        for (const auto& id : data.panel.series_ids) {
            auto fit = qesn::fit_model(frame, id, data.truth.features, qesn::Family::gaussian, 200,
                                       data.panel.length() - 50, settings);
            fit.lower_y = data.panel.lower_y();
            fit.upper_y = data.panel.upper_y_at(fit.train_end);
            fits.push_back(std::move(fit));
        }
    }
};

const SimulationFixture& simulation_fixture() {
    static const SimulationFixture f;
    return f;
}

void BM_SimulatePaths(benchmark::State& state) {
    const auto& f = simulation_fixture();
    const auto start = qesn::initial_state(f.fits);
    qesn::SimulationOptions o;
    o.horizon = 48;
    o.n_path = static_cast<int>(state.range(0));
    o.keep_paths = false;
    o.exec = exec_of(state);
    std::int64_t clamps = 0;
    for (auto _ : state) {
        auto ens = qesn::simulate_paths(f.fits, f.frame, start, o);
        clamps = ens.clamp_count;
        benchmark::DoNotOptimize(ens.mean.data());
    }
    state.counters["clamps"] = static_cast<double>(clamps);
}
BENCHMARK(BM_SimulatePaths)->ArgsProduct({{500, 2000}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_FitModel(benchmark::State& state) {
    const auto& f = simulation_fixture();
    qesn::FitSettings settings;
    settings.reservoir.n_h = 40;
    settings.K = 4;
    settings.mcmc.n_iter = 300;
    settings.mcmc.n_burn = 100;
    settings.exec = exec_of(state);
    for (auto _ : state) {
        auto fit = qesn::fit_model(f.frame, f.data.panel.series_ids[0], f.data.truth.features, qesn::Family::gaussian,
                                   200, 1200, settings);
        benchmark::DoNotOptimize(fit.configs.data());
    }
}
BENCHMARK(BM_FitModel)->ArgsProduct({{0}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
