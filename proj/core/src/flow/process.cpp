#include "emcloud/flow/process.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "detail/json_util.hpp"
#include "emcloud/errors.hpp"

namespace emcloud::flow {

std::string_view to_string(ProcessLevel l) {
  switch (l) {
    case ProcessLevel::Strategic: return "Strategic";
    case ProcessLevel::Operational: return "Operational";
    case ProcessLevel::Support: return "Support";
  }
  return "?";
}

std::string_view to_string(ActivityStatus s) {
  switch (s) {
    case ActivityStatus::Waiting: return "Waiting";
    case ActivityStatus::Ongoing: return "Ongoing";
    case ActivityStatus::Finished: return "Finished";
  }
  return "?";
}

ProcessLevel parse_process_level(std::string_view s) {
  if (s == "Strategic") return ProcessLevel::Strategic;
  if (s == "Operational") return ProcessLevel::Operational;
  if (s == "Support") return ProcessLevel::Support;
  throw std::invalid_argument("unknown process level '" + std::string(s) + "'");
}

ActivityStatus parse_activity_status(std::string_view s) {
  if (s == "Waiting") return ActivityStatus::Waiting;
  if (s == "Ongoing") return ActivityStatus::Ongoing;
  if (s == "Finished") return ActivityStatus::Finished;
  throw std::invalid_argument("unknown activity status '" + std::string(s) + "'");
}

const ActivityDef* ProcessDefinition::activity(std::string_view id) const {
  for (const auto& a : activities) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

const ActivityDef* ProcessDefinition::start_activity() const {
  for (const auto& a : activities) {
    if (a.start) return &a;
  }
  return nullptr;
}

std::vector<std::string> ProcessDefinition::violations() const {
  std::vector<std::string> out;
  if (process_id.empty()) out.push_back("process id is empty");
  if (activities.empty()) out.push_back("process declares no activities");

  std::set<std::string> ids;
  int starts = 0;
  const std::set<std::string> lane_set(lanes.begin(), lanes.end());
  for (const auto& a : activities) {
    if (a.id.empty()) out.push_back("activity with empty id");
    if (!ids.insert(a.id).second) out.push_back("duplicate activity '" + a.id + "'");
    if (a.start) ++starts;
    if (!lanes.empty() && !a.lane.empty() && !lane_set.contains(a.lane)) {
      out.push_back("activity '" + a.id + "' uses undeclared lane '" + a.lane + "'");
    }
    if (a.planned_duration && a.planned_duration->count() < 0) {
      out.push_back("activity '" + a.id + "' has a negative planned duration");
    }
  }
  if (starts != 1) {
    out.push_back("expected exactly one start activity, found " + std::to_string(starts));
  }
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const auto& t = transitions[i];
    const std::string where = "transition #" + std::to_string(i);
    if (!ids.contains(t.from)) out.push_back(where + " leaves undeclared activity '" + t.from + "'");
    if (!ids.contains(t.to)) out.push_back(where + " enters undeclared activity '" + t.to + "'");
    if (t.from == t.to) out.push_back(where + " loops on '" + t.from + "'");
    for (const auto& e : t.emits) {
      if (e.etype.empty()) out.push_back(where + " emits an event without a type");
    }
  }
  return out;
}

ProcessDefinition parse_process(std::string_view document) {
  return detail::to_process(detail::parse_document(document), "$");
}

std::vector<ProcessDefinition> load_process_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const auto doc = detail::parse_document(buf.str());
  std::vector<ProcessDefinition> out;
  if (doc.is_object() && doc.contains("processes")) {
    const auto& arr = doc["processes"];
    if (!arr.is_array()) throw SchemaError("$.processes", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.push_back(detail::to_process(arr[i], "$.processes[" + std::to_string(i) + "]"));
    }
  } else {
    out.push_back(detail::to_process(doc, "$"));
  }
  return out;
}

}  // namespace emcloud::flow
