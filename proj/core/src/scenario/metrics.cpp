#include "emcloud/scenario/metrics.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "emcloud/pattern.hpp"

namespace emcloud::scenario {

namespace {

constexpr std::int64_t kMinuteMs = 60000;

const std::string_view kAlertTypes[] = {
    etypes::kAlertRSN,           etypes::kAlertMF,
    etypes::kSuggestConfinement, etypes::kAlertPoliceRepresentative,
    etypes::kAlertOfficeOfInfrastructure, etypes::kFieldAlert,
};

std::string rate_text(double r) {
  char buf[32];
  if (r == static_cast<double>(static_cast<std::int64_t>(r))) {
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(r));
  } else {
    std::snprintf(buf, sizeof buf, "%.3f", r);
  }
  return buf;
}

nlohmann::ordered_json phase_json(const PhaseMetrics& p) {
  nlohmann::ordered_json j;
  j["name"] = p.name;
  j["from"] = p.from.count();
  j["to"] = p.to.count();
  j["measure_count"] = p.measure_count;
  j["measure_rate"] = p.measure_rate;
  j["measure_rate_exact"] = p.measure_rate_exact;
  j["event_count"] = p.event_count;
  j["event_rate"] = p.event_rate;
  if (p.expected_rate) {
    j["expected_rate"] = *p.expected_rate;
    j["pass"] = p.pass();
  }
  return j;
}

}  // namespace

bool is_measure(std::string_view etype) {
  return etype == etypes::kRadiationMeasure || etype == etypes::kWindSpeedMeasure ||
         etype == etypes::kWindDirectionMeasure;
}

bool PhaseMetrics::pass() const {
  if (!expected_rate) return true;
  const std::int64_t span = (to - from).count();
  return measure_rate_exact && measure_count * kMinuteMs / span == *expected_rate;
}

bool RunMetrics::all_pass() const {
  return std::all_of(milestones.begin(), milestones.end(), [](const auto& m) { return m.pass; }) &&
         std::all_of(phases.begin(), phases.end(), [](const auto& p) { return p.pass(); }) &&
         std::all_of(periods.begin(), periods.end(), [](const auto& p) { return p.pass(); });
}

PhaseMetrics phase_metrics(const std::vector<Event>& log, const Period& period) {
  PhaseMetrics p;
  p.name = period.name;
  p.from = period.from;
  p.to = period.to;
  p.expected_rate = period.expected_rate;
  for (const auto& e : log) {
    if (e.ts < period.from || e.ts >= period.to) continue;
    ++p.event_count;
    if (is_measure(e.etype)) ++p.measure_count;
  }
  const std::int64_t span = (period.to - period.from).count();
  if (span > 0) {
    p.measure_rate = static_cast<double>(p.measure_count * kMinuteMs) / static_cast<double>(span);
    p.event_rate = static_cast<double>(p.event_count * kMinuteMs) / static_cast<double>(span);
    p.measure_rate_exact = (p.measure_count * kMinuteMs) % span == 0;
  }
  return p;
}

RunMetrics metrics(const std::vector<Event>& log, const ScenarioScript& script) {
  RunMetrics m;
  m.total_events = log.size();
  if (!log.empty()) m.last_ts = log.back().ts;
  for (const auto& p : script.phases) m.phases.push_back(phase_metrics(log, p));
  for (const auto& p : script.periods) m.periods.push_back(phase_metrics(log, p));

  for (auto t : kAlertTypes) m.alerts[std::string(t)];
  for (const auto& e : log) {
    if (auto it = m.alerts.find(e.etype); it != m.alerts.end()) {
      if (it->second.empty() || it->second.back() != e.ts) it->second.push_back(e.ts);
    }
    if (e.etype == etypes::kAdaptationProposal) m.proposals.push_back(e.ts);
  }

  for (const auto& spec : script.milestones) {
    MilestoneResult r;
    r.name = spec.name;
    r.expected = spec.at;
    for (const auto& e : log) {
      if (match(spec.pattern, e)) {
        r.actual = e.ts;
        break;
      }
    }
    r.pass = r.actual && *r.actual == spec.at;
    m.milestones.push_back(std::move(r));
  }
  return m;
}

std::string metrics_json(const RunMetrics& m) {
  nlohmann::ordered_json j;
  j["total_events"] = m.total_events;
  if (m.last_ts) j["last_ts"] = m.last_ts->count();
  j["phases"] = nlohmann::ordered_json::array();
  for (const auto& p : m.phases) j["phases"].push_back(phase_json(p));
  j["periods"] = nlohmann::ordered_json::array();
  for (const auto& p : m.periods) j["periods"].push_back(phase_json(p));
  j["alerts"] = nlohmann::ordered_json::object();
  for (const auto& [etype, list] : m.alerts) {
    auto& arr = j["alerts"][etype] = nlohmann::ordered_json::array();
    for (auto t : list) arr.push_back(t.count());
  }
  j["proposals"] = nlohmann::ordered_json::array();
  for (auto t : m.proposals) j["proposals"].push_back(t.count());
  j["milestones"] = nlohmann::ordered_json::array();
  for (const auto& r : m.milestones) {
    nlohmann::ordered_json mj;
    mj["name"] = r.name;
    mj["expected"] = r.expected.count();
    mj["actual"] = r.actual ? nlohmann::ordered_json(r.actual->count()) : nlohmann::ordered_json(nullptr);
    mj["pass"] = r.pass;
    j["milestones"].push_back(std::move(mj));
  }
  j["all_pass"] = m.all_pass();
  return j.dump(2);
}

std::string milestone_table(const RunMetrics& m) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-44s %-12s %-12s %s\n", "milestone", "expected", "actual", "result");
  out += line;
  for (const auto& r : m.milestones) {
    std::snprintf(line, sizeof line, "%-44s %-12s %-12s %s\n", r.name.c_str(),
                  format_sim_time(r.expected).c_str(),
                  r.actual ? format_sim_time(*r.actual).c_str() : "missing", r.pass ? "PASS" : "FAIL");
    out += line;
  }
  for (const auto& p : m.phases) {
    const std::string label = "rate " + p.name + " [" + format_sim_time(p.from) + ", " +
                              format_sim_time(p.to) + ")";
    std::snprintf(line, sizeof line, "%-44s %-12s %-12s %s\n", label.c_str(),
                  p.expected_rate ? (std::to_string(*p.expected_rate) + "/min").c_str() : "-",
                  (rate_text(p.measure_rate) + "/min").c_str(), p.pass() ? "PASS" : "FAIL");
    out += line;
  }
  out += m.all_pass() ? "all milestones passed\n" : "milestone check FAILED\n";
  return out;
}

}  // namespace emcloud::scenario
