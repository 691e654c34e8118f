#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emcloud/event.hpp"
#include "emcloud/pattern.hpp"

namespace emcloud::flow {

enum class ProcessLevel { Strategic, Operational, Support };
enum class ActivityStatus { Waiting, Ongoing, Finished };

std::string_view to_string(ProcessLevel l);
std::string_view to_string(ActivityStatus s);
ProcessLevel parse_process_level(std::string_view s);
ActivityStatus parse_activity_status(std::string_view s);

struct ActivityDef {
  std::string id;
  std::string lane;
  std::optional<Duration> planned_duration;
  bool start = false;
  bool instant = false;  // finishes in the same step it starts
};

/// Event emitted when a transition fires. Source defaults to the lane of
/// the transition's target activity.
struct EventTemplate {
  std::string etype;
  std::optional<std::string> source;
  Attributes attrs;
};

struct TransitionDef {
  std::string from;
  Pattern trigger;
  std::string to;
  std::vector<EventTemplate> emits;
  bool finish_source = true;  // false keeps `from` Ongoing (continuous activities)
};

/// When instances of a process are started automatically.
struct StartRule {
  bool at_epoch = false;
  std::optional<Pattern> on;
  bool repeat = false;  // start a fresh instance on every matching event
};

struct ProcessDefinition {
  std::string process_id;
  std::string name;
  ProcessLevel level = ProcessLevel::Operational;
  std::vector<std::string> lanes;
  std::vector<ActivityDef> activities;
  std::vector<TransitionDef> transitions;
  StartRule start;

  /// Constraint violations; empty when the definition is well formed.
  std::vector<std::string> violations() const;
  const ActivityDef* activity(std::string_view id) const;
  const ActivityDef* start_activity() const;
};

/// Parses one process definition document (see docs/process-format.md).
/// Throws SchemaError with a JSON path on shape errors.
ProcessDefinition parse_process(std::string_view document);

/// A file holds either one definition or {"processes": [...]}.
std::vector<ProcessDefinition> load_process_file(const std::filesystem::path& path);

}  // namespace emcloud::flow
