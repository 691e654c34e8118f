#include <gtest/gtest.h>

#include <random>

#include "emcloud/errors.hpp"
#include "emcloud/event.hpp"
#include "support/oracles.hpp"

using namespace emcloud;
using namespace std::chrono_literals;

namespace {

Event measure() {
  return make_event("RadiationMeasure", "rsn-03", SimTime{420000}, {{"value", 1.8}}, GeoPoint{44.0, 1.2});
}

}  // namespace

TEST(MakeEvent, CarriesFieldsAndNoSeq) {
  auto e = measure();
  EXPECT_EQ(e.etype, "RadiationMeasure");
  EXPECT_EQ(e.source, "rsn-03");
  EXPECT_EQ(e.ts, SimTime{420000});
  EXPECT_EQ(*e.number("value"), 1.8);
  ASSERT_TRUE(e.geo);
  EXPECT_EQ(e.geo->lat, 44.0);
  EXPECT_FALSE(e.seq);
  EXPECT_FALSE(e.id.empty());
}

TEST(MakeEvent, EmptyPayloadIsFine) {
  auto e = make_event("Report", "dcep", SimTime{0});
  EXPECT_TRUE(e.attrs.empty());
  EXPECT_FALSE(e.geo);
}

TEST(MakeEvent, RejectsBadInput) {
  EXPECT_THROW(make_event("X", "s", SimTime{-1}), InvalidEvent);
  EXPECT_THROW(make_event("", "s", SimTime{0}), InvalidEvent);
  EXPECT_THROW(make_event("WindDirectionMeasure", "mf-1", SimTime{0}, {{"direction", 360.0}}), InvalidEvent);
  EXPECT_THROW(make_event("RadiationMeasure", "r", SimTime{0}, {}), InvalidEvent);
}

TEST(MakeEvent, IdsAreUniqueAndSeeded) {
  IdGenerator a(7), b(7);
  auto x = make_event("E", "s", SimTime{0}, {}, std::nullopt, a);
  auto y = make_event("E", "s", SimTime{0}, {}, std::nullopt, a);
  auto z = make_event("E", "s", SimTime{0}, {}, std::nullopt, b);
  EXPECT_NE(x.id, y.id);
  EXPECT_EQ(x.id, z.id);
}

TEST(Codec, FieldOrderAndNumbers) {
  auto e = measure();
  e.seq = 12;
  e.id = "abc";
  EXPECT_EQ(encode_event(e),
            R"({"seq":12,"id":"abc","etype":"RadiationMeasure","source":"rsn-03","ts":420000,)"
            R"("attrs":{"value":1.8},"geo":{"lat":44.0,"lon":1.2}})");
}

TEST(Codec, IntegersAndRealsStayDistinct) {
  auto e = make_event("CirculationPlan", "x", SimTime{1800000},
                      {{"roads_closed", std::int64_t{8}}, {"ratio", 8.0}, {"ok", true}, {"plan", std::string("a\"b")}});
  auto line = encode_event(e);
  EXPECT_NE(line.find(R"("roads_closed":8)"), std::string::npos);
  EXPECT_NE(line.find(R"("ratio":8.0)"), std::string::npos);
  auto back = decode_event(line);
  EXPECT_EQ(back, e);
  EXPECT_TRUE(std::holds_alternative<std::int64_t>(back.attrs.at("roads_closed")));
  EXPECT_TRUE(std::holds_alternative<double>(back.attrs.at("ratio")));
}

TEST(Codec, AttributesSorted) {
  auto e = make_event("E", "s", SimTime{5}, {{"b", 1.0}, {"a", 2.0}, {"c", std::string("x")}});
  auto line = encode_event(e);
  EXPECT_LT(line.find("\"a\""), line.find("\"b\""));
  EXPECT_LT(line.find("\"b\""), line.find("\"c\""));
}

TEST(Codec, MalformedInput) {
  EXPECT_THROW(decode_event("{not json"), DecodeError);
  EXPECT_THROW(decode_event(R"({"id":"x"})"), DecodeError);
  EXPECT_THROW(decode_event(R"({"id":"x","etype":"E","source":"s","ts":-5,"attrs":{}})"), Error);
  try {
    decode_event(R"({"id":"x",)");
    FAIL();
  } catch (const DecodeError& e) {
    EXPECT_GT(e.offset(), 0u);
  }
}

TEST(Codec, RandomRoundTrip) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    auto e = oracle::random_event(rng);
    if (i % 2) e.seq = static_cast<std::uint64_t>(i + 1);
    auto line = encode_event(e);
    auto back = decode_event(line);
    ASSERT_EQ(back, e) << line;
    ASSERT_EQ(encode_event(back), line);
    ASSERT_EQ(encode_event(e), line);
  }
}

TEST(Codec, ShortestRoundTripDoubles) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-1e6, 1e6);
  for (int i = 0; i < 500; ++i) {
    double v = d(rng);
    auto e = make_event("E", "s", SimTime{0}, {{"x", v}});
    auto back = decode_event(encode_event(e));
    ASSERT_EQ(std::get<double>(back.attrs.at("x")), v);
  }
}

TEST(Triples, CountingRule) {
  EXPECT_EQ(as_triples(measure()).size(), 5u);
  EXPECT_EQ(as_triples(make_event("Report", "dcep", SimTime{0})).size(), 3u);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    auto e = oracle::random_event(rng);
    auto t = as_triples(e);
    ASSERT_EQ(t.size(), e.attrs.size() + 3 + (e.geo ? 1 : 0));
    ASSERT_EQ(t, as_triples(e));
    for (const auto& tr : t) ASSERT_EQ(tr.subject, e.id);
  }
}

TEST(Triples, GeoSerializedAsOneTriple) {
  auto t = as_triples(measure());
  auto it = std::find_if(t.begin(), t.end(), [](const Triple& x) { return x.predicate == "geo"; });
  ASSERT_NE(it, t.end());
  EXPECT_EQ(std::get<std::string>(it->object), "44.0,1.2");
}
