#include <benchmark/benchmark.h>

#include "emcloud/scenario/runner.hpp"

using namespace emcloud::scenario;

// Whole nuclear scenario, scripted, as fast as the engine goes.
static void BM_GoldenRun(benchmark::State& state) {
  auto script = load_scenario_file(resolve_scenario("nuclear"));
  std::size_t events = 0;
  for (auto _ : state) {
    ScriptedDecisions d;
    events = run(script, d).events.size();
  }
  state.counters["events"] = static_cast<double>(events);
  state.counters["events_per_s"] = benchmark::Counter(static_cast<double>(events) * state.iterations(), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_GoldenRun)->Unit(benchmark::kMillisecond);
