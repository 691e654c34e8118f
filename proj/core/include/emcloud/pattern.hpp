#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "emcloud/event.hpp"

namespace emcloud {

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

std::string_view to_string(CompareOp op);
CompareOp parse_compare_op(std::string_view text);

struct Predicate {
  std::string attr;
  CompareOp op = CompareOp::Eq;
  Scalar value;

  bool operator==(const Predicate&) const = default;
};

struct GeoFilter {
  GeoPoint center;
  double radius_km = 0.0;

  bool operator==(const GeoFilter&) const = default;
};

/// Content-based subscription predicate. Every present filter must hold;
/// a default-constructed Pattern matches everything.
struct Pattern {
  std::optional<std::set<std::string, std::less<>>> etypes;
  std::vector<Predicate> predicates;
  std::optional<GeoFilter> geo;
  std::optional<std::set<std::string, std::less<>>> sources;

  static Pattern of_type(std::string_view etype);
  Pattern& where(std::string attr, CompareOp op, Scalar value);

  bool operator==(const Pattern&) const = default;
};

constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle (haversine) distance on a sphere of radius kEarthRadiusKm.
double great_circle_km(GeoPoint a, GeoPoint b);

/// Point reached from `origin` after `distance_km` along initial bearing
/// `bearing_deg` (clockwise from north).
GeoPoint destination_point(GeoPoint origin, double bearing_deg, double distance_km);

/// Compares an attribute value against a literal. Numeric kinds compare
/// with each other; strings order lexicographically; booleans support
/// only == and !=. Anything else throws TypeMismatch.
bool compare(const Scalar& lhs, CompareOp op, const Scalar& rhs);

/// True iff every present filter is satisfied. A predicate on an absent
/// attribute, or a geo filter on an event without position, is unsatisfied.
bool match(const Pattern& p, const Event& e);

/// Parses "attr<op>literal", e.g. "value>2.0", "kind==advice".
/// Literals: true/false, integers, reals, otherwise a (optionally quoted) string.
Predicate parse_predicate(std::string_view text);
Scalar parse_literal(std::string_view text);

/// JSON wire form used by the gateway stream and documented in docs/.
std::string encode_pattern(const Pattern& p);
Pattern decode_pattern(std::string_view json_text);

}  // namespace emcloud
