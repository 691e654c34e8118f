#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emcloud/cep/rules.hpp"
#include "emcloud/event.hpp"
#include "emcloud/flow/process.hpp"
#include "emcloud/pattern.hpp"

namespace emcloud::scenario {

enum class SensorKind { Radiation, Weather };

std::string_view to_string(SensorKind k);

struct Shape {
  enum class Kind { Constant, Ramp };
  Kind kind = Kind::Constant;
  double v0 = 0.0;
  double slope_per_min = 0.0;  // Ramp only

  double at(Duration since_start) const;
};

struct Segment {
  SimTime from{0};
  std::optional<SimTime> until;
  Shape shape;
};

/// Which sensors of a group an override applies to: explicit indices, or
/// the `nearest` sensors to the placement center among the initial set.
struct SensorSelector {
  std::vector<std::size_t> indices;
  std::optional<std::size_t> nearest;
};

/// Replaces the program value on [from, until) for the selected sensors.
struct Override {
  SimTime from{0};
  SimTime until{0};
  SensorSelector sensors;
  Shape shape;
};

/// Piecewise value schedule. A segment holds until the next one starts;
/// the first segment starts at t0.
struct ValueProgram {
  std::vector<Segment> segments;
  std::vector<Override> overrides;

  /// Value ignoring overrides.
  double base(SimTime t) const;
};

/// Sensors sit at seeded positions in the annulus [inner_radius_km,
/// radius_km] around `center`, restricted to the bearing sector
/// [sector_from_deg, sector_to_deg] (clockwise from north).
struct Placement {
  GeoPoint center;
  double radius_km = 0.0;
  double inner_radius_km = 0.0;
  double sector_from_deg = 0.0;
  double sector_to_deg = 360.0;
};

/// Radiation groups use the program "value"; weather stations use
/// "speed" and "direction" and emit one event per program per cadence.
struct SensorGroupSpec {
  std::string id;
  SensorKind kind = SensorKind::Radiation;
  std::size_t count = 0;
  Duration cadence{30000};
  Placement placement;
  std::map<std::string, ValueProgram, std::less<>> programs;
};

struct EventSpec {
  std::string etype;
  std::string source;
  Attributes attrs;
  std::optional<GeoPoint> geo;
};

struct Injection {
  enum class Kind { Event, FieldLoss, Release, Activate, RequestResources };
  SimTime at{0};
  Kind kind = Kind::Event;
  EventSpec event;           // Event
  std::string reservation;   // FieldLoss, Release
  std::int64_t quantity = 0; // FieldLoss, Activate, RequestResources
  std::string group;         // Activate
  std::string resource_kind; // RequestResources
  std::string holder;        // RequestResources
};

struct EffectSpec {
  enum class Kind { Activate, RequestResources, Emit };
  Kind kind = Kind::Emit;
  std::string group;
  std::int64_t count = 0;
  std::string resource_kind;
  std::int64_t quantity = 0;
  std::string holder;
  flow::EventTemplate event;  // Emit; source defaults to the point's role
};

struct OptionSpec {
  std::string id;
  std::string label;
  std::vector<EffectSpec> effects;
};

/// A decision the scenario asks a human to take. Ordinary points fire once,
/// on the first event matching `trigger`. Proposal points fire for every
/// matching AdaptationProposalEvent and take their options from it.
struct DecisionPointSpec {
  std::string id;
  std::string role;
  std::string prompt;
  Pattern trigger;
  bool proposal = false;
  std::vector<OptionSpec> options;
  std::optional<std::string> scripted_choice;
  Duration scripted_delay{0};

  const OptionSpec* option(std::string_view id) const;
};

struct Period {
  std::string name;
  SimTime from{0};
  SimTime to{0};
  std::optional<std::int64_t> expected_rate;  // measures per sim-minute
};

/// The first event matching `pattern` must carry ts == at.
struct MilestoneSpec {
  std::string name;
  Pattern pattern;
  SimTime at{0};
};

struct ScenarioScript {
  std::string name;
  std::string epoch_label = "t0";
  std::uint64_t seed = 1;
  Duration tick{30000};
  SimTime end_ts{0};
  std::size_t n_shards = 4;
  cep::RuleConfig rules;
  std::vector<SensorGroupSpec> sensor_groups;
  std::vector<Injection> injections;
  std::vector<DecisionPointSpec> decision_points;
  std::vector<flow::ProcessDefinition> processes;
  std::map<std::string, std::int64_t, std::less<>> inventory;
  Duration reservation_lead_time{300000};
  std::vector<Period> periods;
  std::vector<Period> phases;
  std::vector<MilestoneSpec> milestones;

  const SensorGroupSpec* group(std::string_view id) const;

  /// Throws SemanticError. `scripted` additionally requires a scripted
  /// choice on every ordinary decision point.
  void validate(bool scripted = false) const;
};

/// Parses and validates a scenario document. Relative process file paths
/// resolve against `base_dir`. Throws SchemaError or SemanticError.
ScenarioScript load_scenario(std::string_view document, const std::filesystem::path& base_dir = {});
ScenarioScript load_scenario_file(const std::filesystem::path& path);

/// A path to an existing file, or the name of a shipped scenario.
std::filesystem::path resolve_scenario(std::string_view name_or_path);

}  // namespace emcloud::scenario
