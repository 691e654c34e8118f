#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "emcloud/time.hpp"

namespace emcloud {

/// Attribute value. Integers and reals are distinct kinds on the wire
/// ("8" vs "8.0") but compare numerically with each other.
using Scalar = std::variant<bool, std::int64_t, double, std::string>;
using Attributes = std::map<std::string, Scalar, std::less<>>;

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  bool operator==(const GeoPoint&) const = default;
};

struct Event {
  std::optional<std::uint64_t> seq;  // assigned by the broker at publish
  std::string id;
  std::string etype;
  std::string source;
  SimTime ts{0};
  Attributes attrs;
  std::optional<GeoPoint> geo;

  bool operator==(const Event&) const = default;

  const Scalar* attr(std::string_view name) const;
  std::optional<double> number(std::string_view name) const;
  std::optional<std::string> text(std::string_view name) const;
};

/// Event type names used across the platform.
namespace etypes {
inline constexpr std::string_view kRadiationMeasure = "RadiationMeasure";
inline constexpr std::string_view kWindSpeedMeasure = "WindSpeedMeasure";
inline constexpr std::string_view kWindDirectionMeasure = "WindDirectionMeasure";
inline constexpr std::string_view kAlertRSN = "AlertRSN";
inline constexpr std::string_view kAlertMF = "AlertMF";
inline constexpr std::string_view kReport = "Report";
inline constexpr std::string_view kSuggestConfinement = "SuggestConfinement";
inline constexpr std::string_view kConfinementDecision = "ConfinementDecision";
inline constexpr std::string_view kConfinementPlanValidated = "ConfinementPlanValidated";
inline constexpr std::string_view kAlertPoliceRepresentative = "AlertPoliceRepresentative";
inline constexpr std::string_view kAlertOfficeOfInfrastructure = "AlertOfficeOfInfrastructure";
inline constexpr std::string_view kCirculationPlan = "CirculationPlan";
inline constexpr std::string_view kFieldAlert = "FieldAlert";
inline constexpr std::string_view kFieldReport = "FieldReport";
inline constexpr std::string_view kActivityStatusChange = "ActivityStatusChange";
inline constexpr std::string_view kResourceRequest = "ResourceRequest";
inline constexpr std::string_view kReservationConfirmed = "ReservationConfirmed";
inline constexpr std::string_view kResourcesDelivered = "ResourcesDelivered";
inline constexpr std::string_view kInventoryUpdate = "InventoryUpdate";
inline constexpr std::string_view kTaskAssignment = "TaskAssignment";
inline constexpr std::string_view kReportRequest = "ReportRequest";
inline constexpr std::string_view kAdaptationProposal = "AdaptationProposalEvent";
inline constexpr std::string_view kDecisionPoint = "DecisionPoint";
inline constexpr std::string_view kDecisionChoice = "DecisionChoice";
}  // namespace etypes

/// Deterministic event-id source. Ids are the splitmix64 image of
/// (seed + counter), so they are unique per generator and reproducible
/// from the seed.
class IdGenerator {
 public:
  explicit IdGenerator(std::uint64_t seed = 0) : seed_(seed) {}

  std::string next();

 private:
  std::uint64_t seed_;
  std::atomic<std::uint64_t> counter_{0};
};

/// Process-wide generator used by the make_event overload without one.
IdGenerator& default_id_generator();

Event make_event(std::string etype, std::string source, SimTime ts, Attributes attrs,
                 std::optional<GeoPoint> geo, IdGenerator& ids);
Event make_event(std::string etype, std::string source, SimTime ts, Attributes attrs = {},
                 std::optional<GeoPoint> geo = std::nullopt);

/// Throws InvalidEvent unless the event satisfies the data-model invariants
/// (non-empty etype and id, ts >= 0, finite numbers, per-type payloads).
void validate_event(const Event& e);

/// Canonical single-line JSON form, without the trailing LF.
std::string encode_event(const Event& e);
Event decode_event(std::string_view line);

struct Triple {
  std::string subject;
  std::string predicate;
  Scalar object;

  bool operator==(const Triple&) const = default;
};

std::vector<Triple> as_triples(const Event& e);

std::string to_string(const Scalar& s);
bool is_numeric(const Scalar& s);
double as_double(const Scalar& s);

}  // namespace emcloud
