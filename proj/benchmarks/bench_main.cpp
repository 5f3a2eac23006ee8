#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "hybridcorr/estimator.hpp"
#include "hybridcorr/psd_repair.hpp"
#include "hybridcorr/study.hpp"

namespace {

void BM_EmpiricalCorrelation(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 gen(1);
    std::normal_distribution<double> z;
    std::vector<double> a(n + 1, 0.0), b(n + 1, 0.0);
    for (std::size_t k = 1; k <= n; ++k) {
        a[k] = a[k - 1] + z(gen);
        b[k] = b[k - 1] + z(gen);
    }
    for (auto _ : state) benchmark::DoNotOptimize(hcorr::empirical_correlation(a, b));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_EmpiricalCorrelation)->Arg(100)->Arg(10000)->Arg(100000);

void BM_Repair(benchmark::State& state) {
    const auto blocks = static_cast<std::size_t>(state.range(0));
    const auto n = static_cast<Eigen::Index>(2 * blocks);
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = r + 1; c < n; ++c) m(r, c) = m(c, r) = (r / 2 == c / 2) ? 0.5 * u(gen) : u(gen);
    const hcorr::BlockCorrelationMatrix draft(m, std::vector<std::size_t>(blocks, 2));
    for (auto _ : state) benchmark::DoNotOptimize(hcorr::repair(draft).alpha_star);
}
BENCHMARK(BM_Repair)->Arg(2)->Arg(5)->Arg(20);

void BM_StudyTrial(benchmark::State& state) {
    hcorr::StudyConfig c;
    c.system = hcorr::table_preset(state.range(0) == 0 ? "g2g2" : "g2heston");
    c.n_steps = 10000;
    c.n_trials = 2;
    c.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(hcorr::run_study(c).entries.size());
    state.SetLabel(state.range(0) == 0 ? "g2g2, 2 trials x 10000 steps" : "g2heston, 2 trials x 10000 steps");
}
BENCHMARK(BM_StudyTrial)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
