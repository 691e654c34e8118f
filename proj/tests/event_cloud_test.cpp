#include <gtest/gtest.h>

#include <atomic>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "emcloud/broker.hpp"
#include "emcloud/errors.hpp"
#include "emcloud/history.hpp"
#include "emcloud/pattern.hpp"
#include "emcloud/run_log.hpp"
#include "support/oracles.hpp"

using namespace emcloud;

namespace {

Event alert(std::int64_t ts = 420000, std::string source = "dcep") {
  return make_event("AlertRSN", std::move(source), SimTime{ts}, {{"sensor", std::string("rsn-plant-001")}, {"value", 1.8}});
}

Event rad(std::int64_t ts, std::string src, double v, std::optional<GeoPoint> geo = std::nullopt) {
  return make_event("RadiationMeasure", std::move(src), SimTime{ts}, {{"value", v}}, geo);
}

}  // namespace

TEST(Broker, FirstSeqIsOne) {
  Broker b;
  EXPECT_EQ(b.publish(alert()), 1u);
  EXPECT_EQ(b.publish(alert()), 2u);
}

TEST(Broker, RejectsSequencedEvent) {
  Broker b;
  auto e = alert();
  e.seq = 4;
  EXPECT_THROW(b.publish(e), InvalidEvent);
}

TEST(Broker, SingleMatchDeliveredOnce) {
  Broker b;
  std::vector<Event> got;
  b.subscribe(Pattern::of_type("AlertRSN"), [&](const Event& e) { got.push_back(e); });
  b.publish(rad(0, "r", 0.5));
  auto seq = b.publish(alert());
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(*got[0].seq, seq);
}

TEST(Broker, NoRetroactiveDelivery) {
  Broker b;
  b.publish(alert());
  int n = 0;
  b.subscribe(Pattern::of_type("AlertRSN"), [&](const Event&) { ++n; });
  EXPECT_EQ(n, 0);
  EXPECT_EQ(b.query_history(SimTime{0}, SimTime{1000000}, Pattern::of_type("AlertRSN")).size(), 1u);
}

TEST(Broker, UnsubscribeTwice) {
  Broker b;
  auto id = b.subscribe({}, [](const Event&) {});
  b.unsubscribe(id);
  EXPECT_THROW(b.unsubscribe(id), UnknownSubscription);
}

TEST(Broker, UnsubscribeStopsDelivery) {
  Broker b;
  int n = 0;
  auto id = b.subscribe({}, [&](const Event&) { ++n; });
  b.publish(alert());
  b.unsubscribe(id);
  b.publish(alert());
  EXPECT_EQ(n, 1);
  EXPECT_EQ(b.subscription_count(), 0u);
}

TEST(Broker, TenEventsPerMinuteFromFiveSensors) {
  Broker b;
  std::uint64_t first = 0, last = 0;
  for (std::int64_t t = 0; t < 60000; t += 30000) {
    for (int s = 0; s < 5; ++s) {
      auto seq = b.publish(rad(t, "rsn-" + std::to_string(s), 0.6));
      if (!first) first = seq;
      last = seq;
    }
  }
  EXPECT_EQ(b.size(), 10u);
  EXPECT_EQ(last - first + 1, 10u);
}

TEST(Broker, BatchedOrdersByTsSourceSeq) {
  Broker b(1, DeliveryMode::Batched);
  std::vector<Event> got;
  b.subscribe({}, [&](const Event& e) { got.push_back(e); });
  b.publish(rad(30000, "b", 0.1));
  b.publish(rad(0, "z", 0.1));
  b.publish(rad(30000, "a", 0.1));
  b.publish(rad(0, "z", 0.2));
  EXPECT_TRUE(got.empty());
  EXPECT_EQ(b.flush(), 4u);
  ASSERT_EQ(got.size(), 4u);
  EXPECT_EQ(got[0].source, "z");
  EXPECT_LT(*got[0].seq, *got[1].seq);
  EXPECT_EQ(got[2].source, "a");
  EXPECT_EQ(got[3].source, "b");
}

TEST(Broker, CallbackMayPublish) {
  Broker b;
  std::vector<std::string> seen;
  b.subscribe(Pattern::of_type("RadiationMeasure"), [&](const Event& e) {
    seen.push_back(e.etype);
    if (*e.number("value") > 2.0) b.publish(make_event("AlertRSN", "dcep", e.ts));
  });
  b.subscribe(Pattern::of_type("AlertRSN"), [&](const Event& e) { seen.push_back(e.etype); });
  b.publish(rad(0, "r", 2.5));
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(seen[1], "AlertRSN");
  EXPECT_EQ(b.size(), 2u);
}

TEST(Broker, ThrowingSubscriberIsCounted) {
  Broker b;
  int ok = 0;
  b.subscribe({}, [](const Event&) { throw std::runtime_error("boom"); });
  b.subscribe({}, [&](const Event&) { ++ok; });
  b.publish(alert());
  EXPECT_EQ(ok, 1);
  EXPECT_EQ(b.delivery_failures(), 1u);
}

TEST(Broker, ConcurrentPublishersGetTotalOrder) {
  Broker b(4);
  std::atomic<int> delivered{0};
  b.subscribe({}, [&](const Event&) { ++delivered; });
  std::vector<std::thread> ts;
  for (int t = 0; t < 4; ++t) {
    ts.emplace_back([&, t] {
      for (int i = 0; i < 500; ++i) b.publish(rad(i, "w" + std::to_string(t), 0.1));
    });
  }
  for (auto& t : ts) t.join();
  EXPECT_EQ(delivered.load(), 2000);
  auto log = b.log();
  ASSERT_EQ(log.size(), 2000u);
  for (std::size_t i = 0; i < log.size(); ++i) ASSERT_EQ(*log[i].seq, i + 1);
}

TEST(SubscriberQueue, PopDrainClose) {
  SubscriberQueue q;
  Broker b;
  b.subscribe({}, q.as_subscriber());
  b.publish(alert());
  auto e = q.pop(std::chrono::milliseconds(10));
  ASSERT_TRUE(e);
  EXPECT_FALSE(q.pop(std::chrono::milliseconds(1)));
  b.publish(alert());
  b.publish(alert());
  EXPECT_EQ(q.drain().size(), 2u);
  q.close();
  EXPECT_TRUE(q.closed());
  EXPECT_FALSE(q.pop(std::chrono::milliseconds(1)));
}

// match ------------------------------------------------------------------

TEST(Match, PredicateOnValue) {
  Pattern p = Pattern::of_type("RadiationMeasure");
  p.where("value", CompareOp::Gt, 2.0);
  EXPECT_TRUE(match(p, rad(0, "r", 2.5)));
  EXPECT_FALSE(match(p, rad(0, "r", 2.0)));
  EXPECT_FALSE(match(p, alert()));
}

TEST(Match, EmptyPatternMatchesAll) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) ASSERT_TRUE(match(Pattern{}, oracle::random_event(rng)));
}

TEST(Match, MissingAttributeIsUnsatisfied) {
  Pattern p;
  p.where("speed", CompareOp::Ge, std::int64_t{0});
  EXPECT_FALSE(match(p, rad(0, "r", 1.0)));
}

TEST(Match, TypeMismatch) {
  Pattern p;
  p.where("value", CompareOp::Gt, std::string("high"));
  EXPECT_THROW(match(p, rad(0, "r", 1.0)), TypeMismatch);
  EXPECT_THROW(compare(Scalar{true}, CompareOp::Lt, Scalar{false}), TypeMismatch);
  EXPECT_TRUE(compare(Scalar{std::int64_t{8}}, CompareOp::Eq, Scalar{8.0}));
}

TEST(Match, GeoFilterUsesGreatCircle) {
  Pattern p;
  p.geo = GeoFilter{oracle::kPlant, 5.0};
  // 30 km north of the plant.
  EXPECT_FALSE(match(p, rad(0, "r", 0.1, GeoPoint{44.37649630379063, 0.8453})));
  EXPECT_TRUE(match(p, rad(0, "r", 0.1, GeoPoint{44.1267, 0.8453})));
  EXPECT_FALSE(match(p, rad(0, "r", 0.1)));
}

TEST(Geo, HaversineAgainstFixtures) {
  for (const auto& f : oracle::geo_fixtures()) {
    EXPECT_NEAR(great_circle_km(f.a, f.b), f.km, 1e-6 * std::max(1.0, f.km)) << f.b.lat << "," << f.b.lon;
  }
}

TEST(Geo, DestinationPointRoundTrip) {
  for (double bearing : {0.0, 45.0, 135.0, 270.0}) {
    for (double km : {1.0, 5.0, 30.0, 80.0}) {
      auto p = destination_point(oracle::kPlant, bearing, km);
      EXPECT_NEAR(great_circle_km(oracle::kPlant, p), km, 1e-9 * km);
    }
  }
}

TEST(Match, PureAndAgreesWithOracle) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 3000; ++i) {
    auto e = oracle::random_event(rng);
    auto p = oracle::random_pattern(rng);
    bool a = match(p, e);
    ASSERT_EQ(a, match(p, e));
    ASSERT_EQ(a, oracle::matches(p, e)) << encode_pattern(p) << " " << encode_event(e);
  }
}

TEST(PatternCodec, RoundTrip) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 500; ++i) {
    auto p = oracle::random_pattern(rng);
    ASSERT_EQ(decode_pattern(encode_pattern(p)), p);
  }
  EXPECT_EQ(decode_pattern("{}"), Pattern{});
  EXPECT_THROW(decode_pattern("{\"etype\":"), InvalidPattern);
  EXPECT_THROW(decode_pattern("[1]"), InvalidPattern);
  EXPECT_THROW(decode_pattern(R"({"where":[["value","~",1]]})"), InvalidPattern);
}

TEST(PatternCodec, ObjectWhereShorthand) {
  auto p = decode_pattern(R"({"etype":"Report","where":{"kind":"advice"}})");
  ASSERT_EQ(p.predicates.size(), 1u);
  EXPECT_TRUE(match(p, make_event("Report", "IRSN", SimTime{0}, {{"kind", std::string("advice")}})));
}

TEST(Predicate, Parse) {
  auto p = parse_predicate("value>2.0");
  EXPECT_EQ(p.attr, "value");
  EXPECT_EQ(p.op, CompareOp::Gt);
  EXPECT_EQ(std::get<double>(p.value), 2.0);
  EXPECT_EQ(std::get<std::string>(parse_predicate("kind==advice").value), "advice");
  EXPECT_EQ(std::get<std::int64_t>(parse_predicate("roads_closed>=8").value), 8);
  EXPECT_EQ(parse_predicate("a!=b").op, CompareOp::Ne);
  EXPECT_EQ(std::get<bool>(parse_predicate("ok==true").value), true);
  EXPECT_THROW(parse_predicate("novalue"), InvalidPattern);
}

// history ----------------------------------------------------------------

TEST(History, EmptyRangeAndInvalidRange) {
  Broker b;
  b.publish(alert(100));
  EXPECT_TRUE(b.query_history(SimTime{100}, SimTime{100}, {}).empty());
  EXPECT_THROW(b.query_history(SimTime{200}, SimTime{100}, {}), InvalidRange);
}

TEST(History, HalfOpenAndSorted) {
  Broker b;
  b.publish(rad(60000, "b", 0.1));
  b.publish(rad(0, "b", 0.1));
  b.publish(rad(0, "a", 0.1));
  b.publish(rad(120000, "a", 0.1));
  auto r = b.query_history(SimTime{0}, SimTime{120000}, {});
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].source, "a");
  EXPECT_EQ(r[1].source, "b");
  EXPECT_EQ(r[2].ts, SimTime{60000});
}

TEST(History, ShardOf) {
  for (const auto& t : oracle::scenario_etypes()) {
    EXPECT_EQ(shard_of(t, 1), 0u);
    EXPECT_EQ(shard_of(t, 4), shard_of(t, 4));
    EXPECT_LT(shard_of(t, 4), 4u);
  }
  // FNV-1a 64 of "AlertRSN", reduced mod 4, computed by hand.
  std::uint64_t h = 14695981039346656037ull;
  for (char c : std::string("AlertRSN")) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  EXPECT_EQ(shard_of("AlertRSN", 4), h % 4);
}

TEST(History, AppendRejectsDuplicatesAndUnsequenced) {
  HistoryStore s(2);
  auto e = alert();
  EXPECT_THROW(s.append(e), InvalidEvent);
  e.seq = 1;
  s.append(e);
  EXPECT_THROW(s.append(e), InvalidEvent);
}

TEST(History, RandomQueriesMatchLinearScan) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    Broker b(1 + trial % 8);
    int n = 50 + static_cast<int>(rng() % 300);
    for (int i = 0; i < n; ++i) b.publish(oracle::random_event(rng));
    auto log = b.log();
    std::uniform_int_distribution<std::int64_t> ts(0, 650000);
    std::int64_t a = ts(rng), c = ts(rng);
    if (a > c) std::swap(a, c);
    auto p = oracle::random_pattern(rng);
    ASSERT_EQ(b.query_history(SimTime{a}, SimTime{c}, p), oracle::query(log, SimTime{a}, SimTime{c}, p));
  }
}

TEST(History, ShardedUnionEqualsSingleLog) {
  std::mt19937_64 rng(4);
  std::vector<Event> soup;
  for (int i = 0; i < 3000; ++i) {
    auto e = oracle::random_event(rng);
    e.seq = static_cast<std::uint64_t>(i + 1);
    soup.push_back(e);
  }
  HistoryStore single(1);
  for (const auto& e : soup) single.append(e);
  const SimTime inf{std::numeric_limits<std::int64_t>::max()};
  auto want = single.query_history(SimTime{0}, inf, {});
  for (std::size_t n : {1u, 2u, 4u, 8u}) {
    HistoryStore s(n);
    for (const auto& e : soup) s.append(e);
    EXPECT_EQ(s.all(), soup);
    EXPECT_EQ(s.query_history(SimTime{0}, inf, {}), want);
    std::mt19937_64 r2(n);
    for (int k = 0; k < 50; ++k) {
      auto p = oracle::random_pattern(r2);
      ASSERT_EQ(s.query_history(SimTime{0}, inf, p), single.query_history(SimTime{0}, inf, p));
    }
  }
}

// run log ----------------------------------------------------------------

TEST(RunLog, RoundTripAndReplay) {
  Broker b(4);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 400; ++i) b.publish(oracle::random_event(rng));
  std::stringstream ss;
  write_run_log(ss, b.log());
  const auto text = ss.str();
  auto back = read_run_log(ss);
  EXPECT_EQ(back, b.log());
  std::stringstream again;
  write_run_log(again, back);
  EXPECT_EQ(again.str(), text);

  auto store = replay_into_store(back, 3);
  EXPECT_EQ(store.all(), b.log());
}

TEST(RunLog, AttachLogMatchesLog) {
  Broker b(2, DeliveryMode::Batched);
  std::stringstream out;
  b.attach_log(out);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) b.publish(oracle::random_event(rng));
  b.flush();
  std::stringstream want;
  write_run_log(want, b.log());
  EXPECT_EQ(out.str(), want.str());
}

TEST(RunLog, DecodeErrorOffsetIsAbsolute) {
  Broker b;
  b.publish(alert());
  std::stringstream ss;
  write_run_log(ss, b.log());
  const auto first = ss.str().size();
  ss << "{broken\n";
  try {
    read_run_log(ss);
    FAIL();
  } catch (const DecodeError& e) {
    EXPECT_GE(e.offset(), first);
  }
}
