#include <gtest/gtest.h>

#include <chrono>
#include <future>
#include <thread>

#include "emcloud/errors.hpp"
#include "emcloud/pattern.hpp"
#include "emcloud/scenario/metrics.hpp"
#include "emcloud/scenario/runner.hpp"
#include "emcloud/scenario/script.hpp"
#include "emcloud/scenario/sensors.hpp"
#include "support/oracles.hpp"

using namespace emcloud;
using namespace emcloud::scenario;
using namespace std::chrono_literals;

namespace {

ScenarioScript nuclear() { return load_scenario_file(resolve_scenario("nuclear")); }

// One scripted run of the full scenario, shared by the read-only checks.
const RunLog& golden() {
  static const RunLog log = [] {
    ScriptedDecisions d;
    return run(nuclear(), d);
  }();
  return log;
}

std::vector<SimTime> times_of(const std::vector<Event>& log, std::string_view etype) {
  std::vector<SimTime> out;
  for (const auto& e : log) {
    if (e.etype == etype) out.push_back(e.ts);
  }
  return out;
}

SensorGroupSpec radiation_group(std::size_t count) {
  SensorGroupSpec g;
  g.id = "g";
  g.kind = SensorKind::Radiation;
  g.count = count;
  g.placement = Placement{oracle::kPlant, 30.0, 5.0, 112.5, 157.5};
  ValueProgram p;
  p.segments.push_back(Segment{SimTime{0}, std::nullopt, Shape{Shape::Kind::Constant, 0.4, 0}});
  g.programs["value"] = p;
  return g;
}

}  // namespace

TEST(Load, ShippedScenario) {
  auto s = nuclear();
  EXPECT_EQ(s.name, "nuclear");
  EXPECT_EQ(s.end_ts, SimTime{105min});
  EXPECT_EQ(s.periods.size(), 3u);
  EXPECT_EQ(s.phases.size(), 3u);
  EXPECT_EQ(s.processes.size(), 6u);
  EXPECT_EQ(s.milestones.size(), 20u);
  EXPECT_NO_THROW(s.validate(true));
}

TEST(Load, SchemaErrors) {
  EXPECT_THROW(load_scenario(""), SchemaError);
  EXPECT_THROW(load_scenario("{}"), SchemaError);
  EXPECT_THROW(load_scenario(R"({"end": 5, "sensor_groups": [{"id": "x"}]})"), SchemaError);
  try {
    load_scenario(R"({"end": "t0+5m", "sensor_groups": [{"id": "x", "kind": "Plasma", "count": 1}]})");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(e.path().find("sensor_groups"), std::string::npos) << e.path();
  }
}

TEST(Load, SemanticErrors) {
  EXPECT_THROW(load_scenario(R"({"end": "t0+10m", "sensor_groups": [{"id": "x", "kind": "Radiation", "count": 1,
      "placement": {"center": {"lat": 44, "lon": 1}, "radius_km": 5},
      "program": {"segments": [{"from": "t0", "until": "t0+5m", "constant": 1},
                               {"from": "t0+3m", "constant": 2}]}}]})"),
               SemanticError);
  EXPECT_THROW(load_scenario(R"({"end": "t0+10m", "injections": [{"at": "t0+20m",
      "event": {"etype": "Report", "source": "IRSN"}}]})"),
               SemanticError);
  EXPECT_THROW(load_scenario(R"({"end": "t0+10m", "injections": [{"at": "t0+10s",
      "event": {"etype": "Report", "source": "IRSN"}}]})"),
               SemanticError);
  EXPECT_THROW(load_scenario(R"({"end": "t0+10m", "injections": [{"at": "t0+1m",
      "activate": {"group": "ghost", "count": 3}}]})"),
               SemanticError);
}

TEST(Load, MissingScriptedChoice) {
  auto s = nuclear();
  s.decision_points[0].scripted_choice.reset();
  EXPECT_NO_THROW(s.validate(false));
  EXPECT_THROW(s.validate(true), MissingScriptedChoice);
  ScriptedDecisions d;
  EXPECT_THROW(Runner(s, d), MissingScriptedChoice);
}

TEST(Load, ResolveScenario) {
  EXPECT_TRUE(std::filesystem::exists(resolve_scenario("nuclear")));
  EXPECT_THROW(resolve_scenario("no-such-scenario"), Error);
}

TEST(Program, Shapes) {
  auto s = nuclear();
  const auto& p = s.group("rsn-plant")->programs.at("value");
  EXPECT_DOUBLE_EQ(p.base(SimTime{0}), 0.6);
  EXPECT_DOUBLE_EQ(p.base(SimTime{5min}), 1.2);
  EXPECT_NEAR(p.base(SimTime{6min + 30s}), 1.65, 1e-12);
  EXPECT_DOUBLE_EQ(p.base(SimTime{7min}), 1.8);
  EXPECT_DOUBLE_EQ(p.base(SimTime{100min}), 1.8);
}

TEST(Sensors, TickCounts) {
  auto s = nuclear();
  IdGenerator ids;
  SensorGroup rsn(*s.group("rsn-plant"), s.seed);
  SensorGroup mf(*s.group("mf"), s.seed);
  SensorGroup empty(*s.group("rsn-southeast"), s.seed);
  EXPECT_EQ(sensor_tick(rsn, SimTime{30s}, ids).size(), 5u);
  EXPECT_EQ(sensor_tick(mf, SimTime{30s}, ids).size(), 10u);
  EXPECT_TRUE(sensor_tick(empty, SimTime{30s}, ids).empty());
  EXPECT_TRUE(sensor_tick(rsn, SimTime{45s}, ids).empty());
  std::size_t per_minute = 0;
  for (auto t : {SimTime{0}, SimTime{30s}}) per_minute += sensor_tick(rsn, t, ids).size() + sensor_tick(mf, t, ids).size();
  EXPECT_EQ(per_minute, 30u);

  auto w = sensor_tick(mf, SimTime{9min}, ids);
  int speeds = 0;
  for (const auto& e : w) {
    if (e.etype == "WindSpeedMeasure") {
      ++speeds;
      EXPECT_EQ(*e.number("speed"), 40.0);
    } else {
      EXPECT_EQ(e.etype, "WindDirectionMeasure");
    }
  }
  EXPECT_EQ(speeds, 5);
}

TEST(Sensors, Activation) {
  auto s = nuclear();
  IdGenerator ids;
  SensorGroup se(*s.group("rsn-southeast"), s.seed);
  SensorGroup reg(*s.group("rsn-regional"), s.seed);
  activate_sensors(se, 20, SimTime{9min});
  EXPECT_EQ(se.active(), 20u);
  activate_sensors(reg, 295, SimTime{14min});
  EXPECT_EQ(se.active() + reg.active() + 5, 320u);
  EXPECT_THROW(activate_sensors(se, 0, SimTime{9min}), std::invalid_argument);
  // 320 radiation sensors and 5 stations: 2*320 + 4*5 per minute
  SensorGroup rsn(*s.group("rsn-plant"), s.seed);
  SensorGroup mf(*s.group("mf"), s.seed);
  std::size_t n = 0;
  for (auto t : {SimTime{20min}, SimTime{20min + 30s}}) {
    for (auto* g : {&rsn, &mf, &se, &reg}) n += sensor_tick(*g, t, ids).size();
  }
  EXPECT_EQ(n, 660u);
}

TEST(Sensors, PlacementInsideAnnulusAndSector) {
  SensorGroup g(radiation_group(0), 42);
  g.grow(500);
  for (const auto& s : g.sensors()) {
    double d = oracle::haversine_km(oracle::kPlant, s.position);
    ASSERT_GE(d, 5.0 - 1e-3);
    ASSERT_LE(d, 30.0 + 1e-3);
    double la1 = oracle::kPlant.lat * M_PI / 180, la2 = s.position.lat * M_PI / 180;
    double dl = (s.position.lon - oracle::kPlant.lon) * M_PI / 180;
    double brg = std::atan2(std::sin(dl) * std::cos(la2),
                            std::cos(la1) * std::sin(la2) - std::sin(la1) * std::cos(la2) * std::cos(dl)) *
                 180 / M_PI;
    brg = std::fmod(brg + 360.0, 360.0);
    ASSERT_GE(brg, 112.5 - 1e-3);
    ASSERT_LE(brg, 157.5 + 1e-3);
  }
}

TEST(Sensors, PositionsDeterministic) {
  SensorGroup a(radiation_group(10), 7), b(radiation_group(0), 7), c(radiation_group(10), 8);
  b.grow(4);
  b.grow(6);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(a.sensors()[i].position, b.sensors()[i].position);
    EXPECT_EQ(a.sensors()[i].id, b.sensors()[i].id);
  }
  EXPECT_NE(a.sensors()[0].position, c.sensors()[0].position);
}

TEST(Sensors, NearestOverride) {
  auto s = nuclear();
  SensorGroup g(*s.group("rsn-plant"), s.seed);
  std::vector<std::pair<double, std::size_t>> by_distance;
  for (const auto& x : g.sensors()) by_distance.push_back({oracle::haversine_km(oracle::kPlant, x.position), x.index});
  std::sort(by_distance.begin(), by_distance.end());
  for (std::size_t k = 0; k < by_distance.size(); ++k) {
    double v = g.value("value", by_distance[k].second, SimTime{16min});
    EXPECT_EQ(v, k < 3 ? 2.4 : 1.8) << k;
    EXPECT_EQ(g.value("value", by_distance[k].second, SimTime{20min}), 1.8);
  }
}

TEST(Decisions, BoardSubmitRules) {
  DecisionBoard b;
  DecisionPoint p;
  p.id = "confinement";
  p.role = "RepresentativeNationalAuthority";
  p.options = {{"confine-population", "Confine"}, {"keep-monitoring", "Keep"}};
  b.issue(p);
  EXPECT_EQ(b.open_points().size(), 1u);
  EXPECT_THROW(b.submit({"nope", "x", "u", SimTime{0}}), UnknownPoint);
  EXPECT_THROW(b.submit({"confinement", "evacuate", "u", SimTime{0}}), UnknownPoint);
  auto fut = b.submit({"confinement", "confine-population", "u", SimTime{0}});
  EXPECT_THROW(b.submit({"confinement", "keep-monitoring", "u", SimTime{0}}), AlreadyDecided);
  auto c = b.wait_submitted("confinement");
  EXPECT_EQ(c.option, "confine-population");
  b.record("confinement", c, 77);
  EXPECT_EQ(fut.get(), 77u);
  EXPECT_TRUE(b.open_points().empty());
  EXPECT_THROW(b.submit({"confinement", "keep-monitoring", "u", SimTime{0}}), AlreadyDecided);
}

TEST(Decisions, CloseAbortsWaiters) {
  DecisionBoard b;
  DecisionPoint p;
  p.id = "x";
  p.options = {{"a", "A"}};
  b.issue(p);
  auto waiter = std::async(std::launch::async, [&] { return b.wait_submitted("x"); });
  std::this_thread::sleep_for(20ms);
  b.close();
  EXPECT_THROW(waiter.get(), AbortedByOperator);
  EXPECT_TRUE(b.closed());
}

TEST(Speed, Parse) {
  EXPECT_EQ(parse_speed("max").mode, Speed::Mode::Max);
  auto s = parse_speed("60");
  EXPECT_EQ(s.mode, Speed::Mode::RealTime);
  EXPECT_EQ(s.factor, 60.0);
  EXPECT_THROW(parse_speed("0"), std::invalid_argument);
  EXPECT_THROW(parse_speed("fast"), std::invalid_argument);
}

TEST(Run, EmptyScenario) {
  auto s = load_scenario(R"({"name": "empty", "end": "t0"})");
  ScriptedDecisions d;
  auto log = run(s, d);
  EXPECT_TRUE(log.events.empty());
  EXPECT_EQ(log.end_ts, SimTime{0});
}

TEST(Run, PeriodOneOnly) {
  auto s = oracle::truncate(nuclear(), SimTime{20min});
  ScriptedDecisions d;
  auto log = run(s, d);
  EXPECT_FALSE(times_of(log.events, "AlertRSN").empty());
  EXPECT_FALSE(times_of(log.events, "AlertMF").empty());
  EXPECT_TRUE(times_of(log.events, "AdaptationProposalEvent").empty());
  EXPECT_LE(log.events.back().ts, SimTime{20min});
  auto m = metrics(log.events, s);
  EXPECT_TRUE(m.all_pass()) << milestone_table(m);
}

TEST(Run, GoldenMilestones) {
  const auto& log = golden();
  auto m = metrics(log.events, nuclear());
  EXPECT_TRUE(m.all_pass()) << milestone_table(m);
  EXPECT_EQ(times_of(log.events, "AlertRSN").front(), SimTime{7min});
  EXPECT_EQ(times_of(log.events, "AlertMF").front(), SimTime{9min});
  EXPECT_EQ(times_of(log.events, "AdaptationProposalEvent"), (std::vector<SimTime>{SimTime{60min}, SimTime{80min}}));
  for (const auto& e : log.events) {
    if (e.etype == "CirculationPlan") {
      EXPECT_EQ(*e.number("roads_closed"), 8);
      EXPECT_EQ(*e.number("deviations"), 12);
    }
  }
}

TEST(Run, QueryFirstFiveMinutes) {
  Broker b;
  for (const auto& e : golden().events) {
    auto c = e;
    c.seq.reset();
    b.publish(c);
  }
  EXPECT_EQ(b.query_history(SimTime{0}, SimTime{5min}, Pattern::of_type("RadiationMeasure")).size(), 50u);
}

TEST(Run, ClockMonotoneAndSeqDense) {
  const auto& log = golden().events;
  for (std::size_t i = 0; i < log.size(); ++i) {
    ASSERT_EQ(*log[i].seq, i + 1);
    if (i) ASSERT_GE(log[i].ts, log[i - 1].ts);
  }
}

TEST(Run, ProposalsOnTenMinuteGrid) {
  for (const auto& e : golden().events) {
    if (e.etype == "AdaptationProposalEvent") ASSERT_EQ(e.ts.count() % 600000, 0);
  }
}

TEST(Run, RateLaw) {
  // Sensor measures per minute equal 2 x radiation sensors + 4 x stations.
  const auto& log = golden().events;
  std::map<std::int64_t, std::set<std::string>> rad, wind;
  std::map<std::int64_t, std::int64_t> measures;
  for (const auto& e : log) {
    auto minute = e.ts.count() / 60000;
    if (e.etype == "RadiationMeasure") rad[minute].insert(e.source), ++measures[minute];
    if (e.etype == "WindSpeedMeasure" || e.etype == "WindDirectionMeasure") wind[minute].insert(e.source), ++measures[minute];
  }
  for (const auto& [minute, count] : measures) {
    if (minute >= 105) continue;
    ASSERT_EQ(count, static_cast<std::int64_t>(2 * rad[minute].size() + 4 * wind[minute].size())) << minute;
  }
}

TEST(Run, Deterministic) {
  ScriptedDecisions d;
  auto again = run(nuclear(), d);
  EXPECT_EQ(again.events, golden().events);
}

TEST(Run, SeedChangesIdsOnly) {
  auto s = oracle::truncate(nuclear(), SimTime{10min});
  ScriptedDecisions d;
  auto a = run(s, d);
  s.seed += 1;
  auto b = run(s, d);
  ASSERT_EQ(a.events.size(), b.events.size());
  EXPECT_NE(a.events[0].id, b.events[0].id);
}

TEST(Run, ExternalModePausesClock) {
  auto s = oracle::truncate(nuclear(), SimTime{40min});
  ExternalDecisions ext;
  Runner r(s, ext);
  std::atomic<bool> done{false};
  std::atomic<int> decided{0};
  std::atomic<bool> moved{false};
  std::thread human([&] {
    while (!done) {
      for (const auto& p : r.board().open_points()) {
        if (!r.paused() || r.now() != p.due_ts) continue;
        const auto t = r.now();
        const auto n = r.broker().size();
        std::this_thread::sleep_for(15ms);
        if (r.now() != t || r.broker().size() != n) moved = true;
        auto opt = p.scripted_choice ? *p.scripted_choice : p.options.front().id;
        try {
          auto f = r.board().submit({p.id, opt, "console", t});
          f.get();
          ++decided;
        } catch (const Error&) {
        }
      }
      std::this_thread::sleep_for(1ms);
    }
  });
  auto log = r.run();
  done = true;
  human.join();
  EXPECT_FALSE(moved.load());
  EXPECT_GE(decided.load(), 7);
  EXPECT_EQ(log.pauses.size(), static_cast<std::size_t>(decided.load()));
  for (const auto& p : log.pauses) {
    // Nothing after the pause instant is published until the choice lands.
    EXPECT_GT(p.wall, std::chrono::steady_clock::duration{0});
  }

  ScriptedDecisions d;
  auto scripted = run(s, d);
  auto ms = metrics(scripted.events, s), mi = metrics(log.events, s);
  ASSERT_EQ(ms.milestones.size(), mi.milestones.size());
  for (std::size_t i = 0; i < ms.milestones.size(); ++i) {
    EXPECT_EQ(ms.milestones[i].actual, mi.milestones[i].actual) << ms.milestones[i].name;
  }
  for (const auto& e : log.events) {
    if (e.etype == "DecisionChoice") EXPECT_EQ(*e.text("chooser"), "console");
  }
}

TEST(Run, AbortStopsRun) {
  ExternalDecisions ext;
  Runner r(nuclear(), ext);
  std::thread stopper([&] {
    while (!r.paused()) std::this_thread::sleep_for(1ms);
    r.abort();
  });
  EXPECT_THROW(r.run(), AbortedByOperator);
  stopper.join();
}

TEST(Metrics, Rates) {
  auto m = metrics(golden().events, nuclear());
  ASSERT_EQ(m.phases.size(), 3u);
  const std::int64_t want[] = {30, 70, 660};
  for (int i = 0; i < 3; ++i) {
    EXPECT_TRUE(m.phases[i].measure_rate_exact);
    EXPECT_EQ(m.phases[i].measure_rate, static_cast<double>(want[i]));
  }
}

TEST(Metrics, TamperedLogFails) {
  auto log = golden().events;
  for (auto& e : log) {
    if (e.etype == "AlertRSN" && e.ts == SimTime{7min}) e.ts = SimTime{8min};
  }
  auto m = metrics(log, nuclear());
  EXPECT_FALSE(m.all_pass());
  auto table = milestone_table(m);
  EXPECT_NE(table.find("FAIL"), std::string::npos);
  EXPECT_NE(table.find("milestone check FAILED"), std::string::npos);
}

TEST(Metrics, JsonShape) {
  auto j = metrics_json(metrics(golden().events, nuclear()));
  EXPECT_NE(j.find("\"all_pass\": true"), std::string::npos);
  EXPECT_NE(j.find("\"phases\""), std::string::npos);
}
