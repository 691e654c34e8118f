#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emcloud/event.hpp"
#include "emcloud/scenario/script.hpp"

namespace emcloud::scenario {

/// True for the raw sensor measure types.
bool is_measure(std::string_view etype);

struct PhaseMetrics {
  std::string name;
  SimTime from{0};
  SimTime to{0};
  std::int64_t measure_count = 0;  // raw sensor measures in [from, to)
  std::int64_t event_count = 0;    // every event in [from, to)
  double measure_rate = 0.0;       // per sim-minute
  double event_rate = 0.0;
  bool measure_rate_exact = false;  // measure_count * 1min divisible by the span
  std::optional<std::int64_t> expected_rate;

  /// Exact integer rate equal to the expectation (true when none is set).
  bool pass() const;
};

struct MilestoneResult {
  std::string name;
  SimTime expected{0};
  std::optional<SimTime> actual;
  bool pass = false;
};

struct RunMetrics {
  std::size_t total_events = 0;
  std::optional<SimTime> last_ts;
  std::vector<PhaseMetrics> phases;
  std::vector<PhaseMetrics> periods;
  std::map<std::string, std::vector<SimTime>> alerts;  // distinct ts per alert type
  std::vector<SimTime> proposals;
  std::vector<MilestoneResult> milestones;

  bool all_pass() const;
};

PhaseMetrics phase_metrics(const std::vector<Event>& log, const Period& period);

/// Milestones, phase rates and alert timelines of a run log. Exact
/// integer arithmetic over the log; the log must be in seq order.
RunMetrics metrics(const std::vector<Event>& log, const ScenarioScript& script);

std::string metrics_json(const RunMetrics& m);

/// Plain-text pass/fail table of milestones and phase rates.
std::string milestone_table(const RunMetrics& m);

}  // namespace emcloud::scenario
