#include <benchmark/benchmark.h>

#include <random>

#include "emcloud/broker.hpp"
#include "emcloud/pattern.hpp"

using namespace emcloud;

namespace {

Event measure(std::int64_t i) {
  return make_event("RadiationMeasure", "rsn-" + std::to_string(i % 25), SimTime{i * 100}, {{"value", 0.4 + (i % 7) * 0.1}});
}

}  // namespace

static void BM_PublishNoSubscribers(benchmark::State& state) {
  Broker b(static_cast<std::size_t>(state.range(0)));
  std::int64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(b.publish(measure(i++)));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PublishNoSubscribers)->Arg(1)->Arg(4)->Arg(8);

static void BM_PublishFanout(benchmark::State& state) {
  Broker b(4);
  std::size_t hits = 0;
  for (int s = 0; s < state.range(0); ++s) {
    b.subscribe(Pattern::of_type("RadiationMeasure").where("value", CompareOp::Gt, 0.5 + s * 0.01),
                [&](const Event&) { ++hits; });
  }
  std::int64_t i = 0;
  for (auto _ : state) b.publish(measure(i++));
  benchmark::DoNotOptimize(hits);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PublishFanout)->Arg(1)->Arg(10)->Arg(100);

static void BM_QueryHistoryWindow(benchmark::State& state) {
  Broker b(static_cast<std::size_t>(state.range(0)));
  for (std::int64_t i = 0; i < 60000; ++i) b.publish(measure(i));
  auto p = Pattern::of_type("RadiationMeasure");
  for (auto _ : state) {
    auto r = b.query_history(SimTime{3000000}, SimTime{3300000}, p);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_QueryHistoryWindow)->Arg(1)->Arg(8);

static void BM_MatchPattern(benchmark::State& state) {
  auto p = Pattern::of_type("RadiationMeasure").where("value", CompareOp::Gt, 1.0);
  p.geo = GeoFilter{{44.1067, 0.8453}, 30.0};
  auto e = measure(3);
  e.geo = GeoPoint{44.2, 0.9};
  for (auto _ : state) benchmark::DoNotOptimize(match(p, e));
}
BENCHMARK(BM_MatchPattern);
