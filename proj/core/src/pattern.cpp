#include "emcloud/pattern.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "emcloud/errors.hpp"

namespace emcloud {

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "==";
    case CompareOp::Ne: return "!=";
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
  }
  return "?";
}

CompareOp parse_compare_op(std::string_view text) {
  if (text == "==" || text == "=") return CompareOp::Eq;
  if (text == "!=") return CompareOp::Ne;
  if (text == "<") return CompareOp::Lt;
  if (text == "<=") return CompareOp::Le;
  if (text == ">") return CompareOp::Gt;
  if (text == ">=") return CompareOp::Ge;
  throw InvalidPattern("unknown comparison operator '" + std::string(text) + "'");
}

Pattern Pattern::of_type(std::string_view etype) {
  Pattern p;
  p.etypes.emplace();
  p.etypes->emplace(etype);
  return p;
}

Pattern& Pattern::where(std::string attr, CompareOp op, Scalar value) {
  predicates.push_back({std::move(attr), op, std::move(value)});
  return *this;
}

namespace {

constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

template <typename T>
bool apply(const T& a, CompareOp op, const T& b) {
  switch (op) {
    case CompareOp::Eq: return a == b;
    case CompareOp::Ne: return a != b;
    case CompareOp::Lt: return a < b;
    case CompareOp::Le: return a <= b;
    case CompareOp::Gt: return a > b;
    case CompareOp::Ge: return a >= b;
  }
  return false;
}

const char* kind_name(const Scalar& s) {
  switch (s.index()) {
    case 0: return "boolean";
    case 1: return "integer";
    case 2: return "real";
    default: return "string";
  }
}

}  // namespace

double great_circle_km(GeoPoint a, GeoPoint b) {
  const double phi1 = deg2rad(a.lat);
  const double phi2 = deg2rad(b.lat);
  const double dphi = phi2 - phi1;
  const double dlambda = deg2rad(b.lon - a.lon);
  const double h = std::sin(dphi / 2) * std::sin(dphi / 2) +
                   std::cos(phi1) * std::cos(phi2) * std::sin(dlambda / 2) * std::sin(dlambda / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

GeoPoint destination_point(GeoPoint origin, double bearing_deg, double distance_km) {
  const double delta = distance_km / kEarthRadiusKm;
  const double theta = deg2rad(bearing_deg);
  const double phi1 = deg2rad(origin.lat);
  const double lambda1 = deg2rad(origin.lon);
  const double phi2 = std::asin(std::sin(phi1) * std::cos(delta) +
                                std::cos(phi1) * std::sin(delta) * std::cos(theta));
  const double lambda2 =
      lambda1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(phi1),
                           std::cos(delta) - std::sin(phi1) * std::sin(phi2));
  double lon = rad2deg(lambda2);
  lon = std::fmod(lon + 540.0, 360.0) - 180.0;
  return {rad2deg(phi2), lon};
}

bool compare(const Scalar& lhs, CompareOp op, const Scalar& rhs) {
  if (is_numeric(lhs) && is_numeric(rhs)) {
    if (std::holds_alternative<std::int64_t>(lhs) && std::holds_alternative<std::int64_t>(rhs)) {
      return apply(std::get<std::int64_t>(lhs), op, std::get<std::int64_t>(rhs));
    }
    return apply(as_double(lhs), op, as_double(rhs));
  }
  if (std::holds_alternative<std::string>(lhs) && std::holds_alternative<std::string>(rhs)) {
    return apply(std::get<std::string>(lhs), op, std::get<std::string>(rhs));
  }
  if (std::holds_alternative<bool>(lhs) && std::holds_alternative<bool>(rhs)) {
    if (op != CompareOp::Eq && op != CompareOp::Ne) {
      throw TypeMismatch("booleans support only == and !=");
    }
    return apply(std::get<bool>(lhs), op, std::get<bool>(rhs));
  }
  throw TypeMismatch(std::string("cannot compare ") + kind_name(lhs) + " with " +
                     kind_name(rhs));
}

bool match(const Pattern& p, const Event& e) {
  if (p.etypes && !p.etypes->contains(e.etype)) return false;
  if (p.sources && !p.sources->contains(e.source)) return false;
  for (const auto& pred : p.predicates) {
    const Scalar* v = e.attr(pred.attr);
    if (v == nullptr || !compare(*v, pred.op, pred.value)) return false;
  }
  if (p.geo) {
    if (!e.geo) return false;
    if (great_circle_km(p.geo->center, *e.geo) > p.geo->radius_km) return false;
  }
  return true;
}

Scalar parse_literal(std::string_view text) {
  if (text == "true") return true;
  if (text == "false") return false;
  if (text.size() >= 2 && ((text.front() == '"' && text.back() == '"') ||
                           (text.front() == '\'' && text.back() == '\''))) {
    return std::string(text.substr(1, text.size() - 2));
  }
  std::int64_t i = 0;
  auto [iend, iec] = std::from_chars(text.data(), text.data() + text.size(), i);
  if (iec == std::errc{} && iend == text.data() + text.size() && !text.empty()) return i;
  double d = 0.0;
  auto [dend, dec] = std::from_chars(text.data(), text.data() + text.size(), d);
  if (dec == std::errc{} && dend == text.data() + text.size() && !text.empty() &&
      std::isfinite(d)) {
    return d;
  }
  return std::string(text);
}

Predicate parse_predicate(std::string_view text) {
  static constexpr std::string_view kOps[] = {">=", "<=", "!=", "==", ">", "<", "="};
  std::size_t best = std::string_view::npos;
  std::string_view best_op;
  for (auto op : kOps) {
    auto pos = text.find(op);
    if (pos != std::string_view::npos && (pos < best || (pos == best && op.size() > best_op.size()))) {
      best = pos;
      best_op = op;
    }
  }
  if (best == std::string_view::npos || best == 0) {
    throw InvalidPattern("predicate must look like attr<op>value: '" + std::string(text) + "'");
  }
  Predicate p;
  p.attr = std::string(text.substr(0, best));
  p.op = parse_compare_op(best_op);
  p.value = parse_literal(text.substr(best + best_op.size()));
  return p;
}

namespace {

using json = nlohmann::json;

json scalar_json(const Scalar& s) {
  return std::visit([](const auto& v) { return json(v); }, s);
}

Scalar json_scalar(const json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw InvalidPattern("predicate value must be a scalar");
}

std::set<std::string, std::less<>> string_set(const json& j, const char* field) {
  std::set<std::string, std::less<>> out;
  if (j.is_string()) {
    out.insert(j.get<std::string>());
    return out;
  }
  if (!j.is_array()) throw InvalidPattern(std::string("'") + field + "' must be a string or an array");
  for (const auto& v : j) {
    if (!v.is_string()) throw InvalidPattern(std::string("'") + field + "' entries must be strings");
    out.insert(v.get<std::string>());
  }
  return out;
}

}  // namespace

std::string encode_pattern(const Pattern& p) {
  json j = json::object();
  if (p.etypes) j["etype"] = json(std::vector<std::string>(p.etypes->begin(), p.etypes->end()));
  if (p.sources) j["source"] = json(std::vector<std::string>(p.sources->begin(), p.sources->end()));
  if (!p.predicates.empty()) {
    json where = json::array();
    for (const auto& pr : p.predicates) {
      where.push_back(json::array({pr.attr, std::string(to_string(pr.op)), scalar_json(pr.value)}));
    }
    j["where"] = std::move(where);
  }
  if (p.geo) {
    j["geo"] = {{"lat", p.geo->center.lat}, {"lon", p.geo->center.lon},
                {"radius_km", p.geo->radius_km}};
  }
  return j.dump();
}

Pattern decode_pattern(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& ex) {
    throw InvalidPattern(std::string("pattern is not valid JSON: ") + ex.what());
  }
  if (!j.is_object()) throw InvalidPattern("pattern must be a JSON object");
  Pattern p;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& key = it.key();
    const auto& v = it.value();
    if (key == "etype") {
      p.etypes = string_set(v, "etype");
    } else if (key == "source") {
      p.sources = string_set(v, "source");
    } else if (key == "where") {
      if (v.is_object()) {
        // {"attr": value, ...} is shorthand for equality tests
        for (auto w = v.begin(); w != v.end(); ++w) p.predicates.push_back({w.key(), CompareOp::Eq, json_scalar(w.value())});
        continue;
      }
      if (!v.is_array()) throw InvalidPattern("'where' must be an array or an object");
      for (const auto& pr : v) {
        if (pr.is_string()) {
          p.predicates.push_back(parse_predicate(pr.get<std::string>()));
        } else if (pr.is_array() && pr.size() == 3 && pr[0].is_string() && pr[1].is_string()) {
          p.predicates.push_back({pr[0].get<std::string>(),
                                  parse_compare_op(pr[1].get<std::string>()), json_scalar(pr[2])});
        } else {
          throw InvalidPattern("'where' entries are [attr, op, value] or \"attr<op>value\"");
        }
      }
    } else if (key == "geo") {
      if (!v.is_object() || !v.contains("lat") || !v.contains("lon") || !v.contains("radius_km")) {
        throw InvalidPattern("'geo' needs lat, lon, radius_km");
      }
      GeoFilter g{{v["lat"].get<double>(), v["lon"].get<double>()}, v["radius_km"].get<double>()};
      if (!(g.radius_km >= 0.0)) throw InvalidPattern("geo radius must be >= 0");
      p.geo = g;
    } else {
      throw InvalidPattern("unknown pattern field '" + key + "'");
    }
  }
  return p;
}

}  // namespace emcloud
