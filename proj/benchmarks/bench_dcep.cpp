#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "emcloud/cep/rules.hpp"

using namespace emcloud;
using namespace emcloud::cep;

static void BM_EstimateSlope(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> noise(-0.1, 0.1);
  std::vector<Sample> s;
  for (std::int64_t k = 0; k < state.range(0); ++k) s.push_back({SimTime{k * 30000}, 0.6 + 0.15 * k + noise(rng)});
  for (auto _ : state) benchmark::DoNotOptimize(estimate_slope(s));
}
BENCHMARK(BM_EstimateSlope)->Arg(13)->Arg(120);

static void BM_EvalRadiationRule(benchmark::State& state) {
  RuleConfig cfg;
  IdGenerator ids;
  SensorWindow w;
  for (int k = 0; k <= 12; ++k) w.push(SimTime{k * 30000}, 0.6 + 0.05 * k);
  for (auto _ : state) {
    Suppressor sup;
    benchmark::DoNotOptimize(eval_radiation_rule("rsn-1", w, cfg, sup, SimTime{6 * 60000}, ids));
  }
}
BENCHMARK(BM_EvalRadiationRule);

static void BM_CircularSpan(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> deg(0.0, 360.0);
  std::vector<Sample> s;
  for (std::int64_t k = 0; k < state.range(0); ++k) s.push_back({SimTime{k * 15000}, deg(rng)});
  for (auto _ : state) benchmark::DoNotOptimize(circular_span(s));
}
BENCHMARK(BM_CircularSpan)->Arg(8)->Arg(64);
