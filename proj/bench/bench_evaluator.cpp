// Serial reference vs OpenMP batch evaluation of one population.

#include <benchmark/benchmark.h>

#include <gaintune/harness/experiment.h>

using namespace gaintune;

namespace {

struct Batch
{
    std::vector<opt::Vector> members;
    std::vector<std::uint64_t> seeds;
};

Batch make_batch(int n)
{
    Batch b;
    Philox rng(11, 0);
    for (int i = 0; i < n; ++i)
    {
        b.members.push_back(objective::sample_uniform(objective::SearchSpace::table(), rng));
        b.seeds.push_back(harness::evaluation_seed(11, 0, i));
    }
    return b;
}

sim::RolloutConfig short_rollout()
{
    sim::RolloutConfig rc;
    rc.max_time = 1.0;
    return rc;
}

void BM_BatchSerial(benchmark::State& state)
{
    const Batch b = make_batch(static_cast<int>(state.range(0)));
    const harness::Evaluator ev(short_rollout(), objective::ObjectiveSpec::g1(), 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(ev.evaluate_batch_serial(b.members, b.seeds));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchParallel(benchmark::State& state)
{
    const Batch b = make_batch(static_cast<int>(state.range(0)));
    const harness::Evaluator ev(short_rollout(), objective::ObjectiveSpec::g1(), static_cast<int>(state.range(1)));
    for (auto _ : state)
        benchmark::DoNotOptimize(ev.evaluate_batch(b.members, b.seeds));
    state.SetItemsProcessed(state.iterations() * state.range(0));
    state.counters["workers"] = static_cast<double>(ev.workers());
}

} // namespace

BENCHMARK(BM_BatchSerial)->Arg(16)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BatchParallel)->Args({16, 1})->Args({16, 2})->Args({16, 4})->Args({16, 0})
    ->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
