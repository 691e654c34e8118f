#include "emcloud/event.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "emcloud/errors.hpp"

namespace emcloud {

using ordered_json = nlohmann::ordered_json;

std::string format_sim_time(SimTime t) {
  const bool negative = t.count() < 0;
  const auto abs_ms = negative ? -t.count() : t.count();
  const auto minutes = abs_ms / 60000;
  const auto seconds = (abs_ms % 60000) / 1000;
  char buf[48];
  std::snprintf(buf, sizeof buf, "t0%c%lld:%02lld", negative ? '-' : '+',
                static_cast<long long>(minutes), static_cast<long long>(seconds));
  return buf;
}

const Scalar* Event::attr(std::string_view name) const {
  auto it = attrs.find(name);
  return it == attrs.end() ? nullptr : &it->second;
}

std::optional<double> Event::number(std::string_view name) const {
  const Scalar* s = attr(name);
  if (s == nullptr || !is_numeric(*s)) return std::nullopt;
  return as_double(*s);
}

std::optional<std::string> Event::text(std::string_view name) const {
  const Scalar* s = attr(name);
  if (s == nullptr) return std::nullopt;
  if (const auto* str = std::get_if<std::string>(s)) return *str;
  return std::nullopt;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string IdGenerator::next() {
  const std::uint64_t n = counter_.fetch_add(1, std::memory_order_relaxed);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(splitmix64(seed_ + n)));
  return buf;
}

IdGenerator& default_id_generator() {
  static IdGenerator gen{0x5eedULL};
  return gen;
}

bool is_numeric(const Scalar& s) {
  return std::holds_alternative<std::int64_t>(s) || std::holds_alternative<double>(s);
}

double as_double(const Scalar& s) {
  if (const auto* i = std::get_if<std::int64_t>(&s)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&s)) return *d;
  throw TypeMismatch("scalar is not numeric");
}

std::string to_string(const Scalar& s) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else {
          return ordered_json(v).dump();
        }
      },
      s);
}

void validate_event(const Event& e) {
  if (e.etype.empty()) throw InvalidEvent("event type must be non-empty");
  if (e.id.empty()) throw InvalidEvent("event id must be non-empty");
  if (e.ts.count() < 0) throw InvalidEvent("timestamp must be >= 0");
  for (const auto& [name, value] : e.attrs) {
    if (name.empty()) throw InvalidEvent("attribute name must be non-empty");
    if (const auto* d = std::get_if<double>(&value); d != nullptr && !std::isfinite(*d)) {
      throw InvalidEvent("attribute '" + name + "' is not finite");
    }
  }
  if (e.geo && (!std::isfinite(e.geo->lat) || !std::isfinite(e.geo->lon) ||
                std::abs(e.geo->lat) > 90.0 || std::abs(e.geo->lon) > 180.0)) {
    throw InvalidEvent("geo position out of range");
  }
  auto require_number = [&](std::string_view attr) {
    auto v = e.number(attr);
    if (!v) {
      throw InvalidEvent(e.etype + " requires numeric attribute '" + std::string(attr) + "'");
    }
    return *v;
  };
  if (e.etype == etypes::kRadiationMeasure) {
    if (require_number("value") < 0.0) throw InvalidEvent("radiation value must be >= 0");
  } else if (e.etype == etypes::kWindSpeedMeasure) {
    if (require_number("speed") < 0.0) throw InvalidEvent("wind speed must be >= 0");
  } else if (e.etype == etypes::kWindDirectionMeasure) {
    const double d = require_number("direction");
    if (d < 0.0 || d >= 360.0) throw InvalidEvent("wind direction must lie in [0, 360)");
  }
}

Event make_event(std::string etype, std::string source, SimTime ts, Attributes attrs,
                 std::optional<GeoPoint> geo, IdGenerator& ids) {
  Event e;
  e.id = ids.next();
  e.etype = std::move(etype);
  e.source = std::move(source);
  e.ts = ts;
  e.attrs = std::move(attrs);
  e.geo = geo;
  validate_event(e);
  return e;
}

Event make_event(std::string etype, std::string source, SimTime ts, Attributes attrs,
                 std::optional<GeoPoint> geo) {
  return make_event(std::move(etype), std::move(source), ts, std::move(attrs), geo,
                    default_id_generator());
}

namespace {

ordered_json scalar_to_json(const Scalar& s) {
  return std::visit([](const auto& v) { return ordered_json(v); }, s);
}

}  // namespace

std::string encode_event(const Event& e) {
  ordered_json j = ordered_json::object();
  if (e.seq) j["seq"] = *e.seq;
  j["id"] = e.id;
  j["etype"] = e.etype;
  j["source"] = e.source;
  j["ts"] = e.ts.count();
  ordered_json attrs = ordered_json::object();
  for (const auto& [k, v] : e.attrs) attrs[k] = scalar_to_json(v);  // map order: sorted
  j["attrs"] = std::move(attrs);
  if (e.geo) {
    ordered_json g = ordered_json::object();
    g["lat"] = e.geo->lat;
    g["lon"] = e.geo->lon;
    j["geo"] = std::move(g);
  }
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

namespace {

[[noreturn]] void fail(const std::string& what) { throw DecodeError(0, what); }

double json_real(const ordered_json& v, const char* field) {
  if (!v.is_number()) fail(std::string("field '") + field + "' must be a number");
  return v.get<double>();
}

}  // namespace

Event decode_event(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  ordered_json j;
  try {
    j = ordered_json::parse(line.begin(), line.end());
  } catch (const nlohmann::json::parse_error& ex) {
    throw DecodeError(ex.byte == 0 ? 0 : ex.byte - 1, "malformed event line");
  }
  if (!j.is_object()) fail("event line must be a JSON object");

  Event e;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const ordered_json& v = it.value();
    if (key == "seq") {
      if (!v.is_number_unsigned()) fail("field 'seq' must be an unsigned integer");
      e.seq = v.get<std::uint64_t>();
    } else if (key == "id" || key == "etype" || key == "source") {
      if (!v.is_string()) fail("field '" + key + "' must be a string");
      (key == "id" ? e.id : key == "etype" ? e.etype : e.source) = v.get<std::string>();
    } else if (key == "ts") {
      if (!v.is_number_integer()) fail("field 'ts' must be an integer");
      e.ts = SimTime{v.get<std::int64_t>()};
    } else if (key == "attrs") {
      if (!v.is_object()) fail("field 'attrs' must be an object");
      for (auto a = v.begin(); a != v.end(); ++a) {
        const ordered_json& av = a.value();
        Scalar s;
        if (av.is_boolean()) {
          s = av.get<bool>();
        } else if (av.is_number_integer()) {
          if (av.is_number_unsigned() &&
              av.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
            fail("attribute '" + a.key() + "' overflows int64");
          }
          s = av.get<std::int64_t>();
        } else if (av.is_number_float()) {
          s = av.get<double>();
        } else if (av.is_string()) {
          s = av.get<std::string>();
        } else {
          fail("attribute '" + a.key() + "' is not a scalar");
        }
        e.attrs.insert_or_assign(a.key(), std::move(s));
      }
    } else if (key == "geo") {
      if (!v.is_object() || v.size() != 2 || !v.contains("lat") || !v.contains("lon")) {
        fail("field 'geo' must be {\"lat\":..,\"lon\":..}");
      }
      e.geo = GeoPoint{json_real(v["lat"], "geo.lat"), json_real(v["lon"], "geo.lon")};
    } else {
      fail("unknown field '" + key + "'");
    }
  }
  if (!j.contains("id") || !j.contains("etype") || !j.contains("source") ||
      !j.contains("ts") || !j.contains("attrs")) {
    fail("missing required field (id, etype, source, ts, attrs)");
  }
  try {
    validate_event(e);
  } catch (const InvalidEvent& ex) {
    fail(ex.what());
  }
  return e;
}

std::vector<Triple> as_triples(const Event& e) {
  std::vector<Triple> out;
  out.reserve(e.attrs.size() + 4);
  out.push_back({e.id, "etype", e.etype});
  out.push_back({e.id, "source", e.source});
  out.push_back({e.id, "ts", static_cast<std::int64_t>(e.ts.count())});
  if (e.geo) {
    out.push_back({e.id, "geo",
                   to_string(Scalar{e.geo->lat}) + "," + to_string(Scalar{e.geo->lon})});
  }
  for (const auto& [k, v] : e.attrs) out.push_back({e.id, k, v});
  return out;
}

}  // namespace emcloud
