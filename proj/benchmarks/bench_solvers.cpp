#include <benchmark/benchmark.h>

#include <filesystem>

#include "phasorflow/experiments.hpp"
#include "phasorflow/feeder_io.hpp"

namespace pf = phasorflow;

namespace {

const pf::Network& dual13() {
    static const pf::Network net = pf::build_scenario_network(
        pf::load_scenario_file(std::filesystem::path(PHASORFLOW_BENCH_DATA_DIR) / "ieee13_dual.json"));
    return net;
}

const pf::Network& dual37() {
    static const pf::Network net = pf::build_scenario_network(
        pf::load_scenario_file(std::filesystem::path(PHASORFLOW_BENCH_DATA_DIR) / "ieee37_dual.json"));
    return net;
}

void BM_SolveExact13(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(pf::solve_exact(dual13()));
}
BENCHMARK(BM_SolveExact13);

void BM_SolveExact37(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(pf::solve_exact(dual37()));
}
BENCHMARK(BM_SolveExact37);

void BM_SolveLinear13(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(pf::solve_linear(dual13()));
}
BENCHMARK(BM_SolveLinear13);

void BM_SolveLinear37(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(pf::solve_linear(dual37()));
}
BENCHMARK(BM_SolveLinear37);

void BM_SolveOpf13(benchmark::State& state) {
    const pf::OpfProblem prob = pf::build_opf(dual13(), {{"1680", "2680"}}, {1000.0, 1000.0, 1.0});
    for (auto _ : state) benchmark::DoNotOptimize(pf::solve_opf(prob));
}
BENCHMARK(BM_SolveOpf13)->Unit(benchmark::kMillisecond);

void BM_MonteCarloCell(benchmark::State& state) {
    static const pf::Network net = pf::apply_modifications(
        pf::load_feeder_file(std::filesystem::path(PHASORFLOW_BENCH_DATA_DIR) / "ieee13.json"),
        pf::parse_modifications(
            pf::read_json_file(std::filesystem::path(PHASORFLOW_BENCH_DATA_DIR) / "mods_ieee13.json")));
    pf::MonteCarloOptions o;
    o.dr_values = {0.1};
    o.di_values = {0.1};
    o.per_cell = 100;
    o.workers = 1;
    for (auto _ : state) benchmark::DoNotOptimize(pf::monte_carlo(net, o));
}
BENCHMARK(BM_MonteCarloCell)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
