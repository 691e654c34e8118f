#include "emcloud/cep/rules.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "emcloud/errors.hpp"

namespace emcloud::cep {

void Thresholds::validate() const {
  const double all[] = {v_plus, v_minus, s, d_wi, d_wd, control_zone, evac_cumulative};
  for (double v : all) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidRuleSpec("thresholds must be positive");
  }
  if (!(v_plus > v_minus)) throw InvalidRuleSpec("v_plus must exceed v_minus");
}

std::string_view to_string(RuleKind k) {
  switch (k) {
    case RuleKind::RadiationAlert: return "RadiationAlert";
    case RuleKind::WindAlert: return "WindAlert";
    case RuleKind::PeriodicReport: return "PeriodicReport";
    case RuleKind::ConfinementTrigger: return "ConfinementTrigger";
    case RuleKind::ConfinementCascade: return "ConfinementCascade";
    case RuleKind::PlanCascade: return "PlanCascade";
    case RuleKind::ResourceGapCheck: return "ResourceGapCheck";
    case RuleKind::StatusGapCheck: return "StatusGapCheck";
    case RuleKind::BarrierClassification: return "BarrierClassification";
  }
  return "?";
}

void RuleSpec::validate() const {
  if (rule_id.empty()) throw InvalidRuleSpec("rule id must be non-empty");
  const bool windowed = kind == RuleKind::RadiationAlert || kind == RuleKind::WindAlert ||
                        kind == RuleKind::ConfinementTrigger || kind == RuleKind::PeriodicReport;
  const bool periodic = kind == RuleKind::PeriodicReport || kind == RuleKind::ConfinementTrigger ||
                        kind == RuleKind::ResourceGapCheck || kind == RuleKind::StatusGapCheck;
  if (windowed && window <= Duration{0}) {
    throw InvalidRuleSpec(rule_id + ": windowed rule needs window > 0");
  }
  if (periodic && period <= Duration{0}) {
    throw InvalidRuleSpec(rule_id + ": periodic rule needs period > 0");
  }
  if (suppression < Duration{0}) throw InvalidRuleSpec(rule_id + ": negative suppression");
}

std::vector<RuleSpec> RuleConfig::rules() const {
  return {
      {"radiation-alert", RuleKind::RadiationAlert, radiation_window, Duration{0}, suppression},
      {"wind-alert", RuleKind::WindAlert, wind_window, Duration{0}, suppression},
      {"rsn-report", RuleKind::PeriodicReport, report_window, report_period, Duration{0}},
      {"confinement-trigger", RuleKind::ConfinementTrigger, confinement_window, report_period,
       suppression},
      {"confinement-cascade", RuleKind::ConfinementCascade, Duration{0}, Duration{0}, Duration{0}},
      {"plan-cascade", RuleKind::PlanCascade, Duration{0}, Duration{0}, Duration{0}},
      {"resource-gap-check", RuleKind::ResourceGapCheck, Duration{0}, sar_period, Duration{0}},
      {"status-gap-check", RuleKind::StatusGapCheck, Duration{0}, sar_period, Duration{0}},
      {"barrier-classification", RuleKind::BarrierClassification, Duration{0}, Duration{0},
       Duration{0}},
  };
}

void RuleConfig::validate() const {
  thresholds.validate();
  for (const auto& r : rules()) r.validate();
  if (confinement_sensor_count < 1) throw InvalidRuleSpec("confinement sensor count must be >= 1");
  if (out_of_order_slack < Duration{0}) throw InvalidRuleSpec("negative out-of-order slack");
}

void SensorWindow::push(SimTime ts, double value) {
  if (!samples_.empty() && ts < samples_.back().ts) {
    throw OutOfOrder("sample at " + format_sim_time(ts) + " precedes " +
                     format_sim_time(samples_.back().ts));
  }
  samples_.push_back({ts, value});
}

void SensorWindow::trim(SimTime now, Duration window) {
  const SimTime cutoff = now - window;
  auto first_kept = std::find_if(samples_.begin(), samples_.end(),
                                 [&](const Sample& s) { return s.ts >= cutoff; });
  samples_.erase(samples_.begin(), first_kept);
}

std::optional<Sample> SensorWindow::latest() const {
  if (samples_.empty()) return std::nullopt;
  return samples_.back();
}

std::optional<double> estimate_slope(std::span<const Sample> samples, Duration required_span) {
  if (samples.size() < 2) throw InsufficientSamples("slope needs at least two samples");
  const SimTime first = samples.front().ts;
  SimTime lo = first, hi = first;
  for (const auto& s : samples) {
    lo = std::min(lo, s.ts);
    hi = std::max(hi, s.ts);
  }
  if (hi == lo) throw InsufficientSamples("slope needs samples at distinct times");
  if (hi - lo < required_span) return std::nullopt;

  // Centered sums keep the fit well conditioned for large ts offsets.
  const double n = static_cast<double>(samples.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& s : samples) {
    mean_x += to_minutes(s.ts - first);
    mean_y += s.value;
  }
  mean_x /= n;
  mean_y /= n;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& s : samples) {
    const double dx = to_minutes(s.ts - first) - mean_x;
    sxy += dx * (s.value - mean_y);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

bool radiation_rule_holds(double value, std::optional<double> slope, const Thresholds& t) {
  return value > t.v_plus || (value > t.v_minus && slope.has_value() && *slope > t.s);
}

double speed_change(std::span<const Sample> speeds) {
  if (speeds.empty()) return 0.0;
  auto [mn, mx] = std::minmax_element(speeds.begin(), speeds.end(),
                                      [](const Sample& a, const Sample& b) { return a.value < b.value; });
  return mx->value - mn->value;
}

double circular_span(std::span<const Sample> directions) {
  if (directions.size() < 2) return 0.0;
  std::vector<double> angles;
  angles.reserve(directions.size());
  for (const auto& s : directions) {
    double a = std::fmod(s.value, 360.0);
    if (a < 0) a += 360.0;
    angles.push_back(a);
  }
  std::sort(angles.begin(), angles.end());
  double max_gap = angles.front() + 360.0 - angles.back();
  for (std::size_t i = 1; i < angles.size(); ++i) {
    max_gap = std::max(max_gap, angles[i] - angles[i - 1]);
  }
  return 360.0 - max_gap;
}

bool wind_rule_holds(double speed_delta, double direction_span, const Thresholds& t) {
  return direction_span > t.d_wd || speed_delta > t.d_wi;
}

bool Suppressor::suppressed(std::string_view key, SimTime now) const {
  auto it = last_.find(key);
  return it != last_.end() && now - it->second < window_;
}

void Suppressor::record(std::string_view key, SimTime now) {
  last_.insert_or_assign(std::string(key), now);
}

std::optional<Event> eval_radiation_rule(std::string_view sensor_id, const SensorWindow& window,
                                         const RuleConfig& config, Suppressor& suppressor,
                                         SimTime now, IdGenerator& ids,
                                         std::optional<GeoPoint> geo) {
  const auto latest = window.latest();
  if (!latest) return std::nullopt;
  std::optional<double> slope;
  if (window.size() >= 2 && window.samples().back().ts != window.samples().front().ts) {
    slope = estimate_slope(window.samples(), config.radiation_window);
  }
  if (!radiation_rule_holds(latest->value, slope, config.thresholds)) return std::nullopt;
  if (suppressor.suppressed(sensor_id, now)) return std::nullopt;
  suppressor.record(sensor_id, now);

  Attributes attrs{
      {"sensor", std::string(sensor_id)},
      {"value", latest->value},
      {"reason", std::string(latest->value > config.thresholds.v_plus ? "above-v-plus"
                                                                       : "rising-above-v-minus")},
  };
  if (slope) attrs.emplace("slope", *slope);
  return make_event(std::string(etypes::kAlertRSN), "dcep", now, std::move(attrs), geo, ids);
}

std::optional<Event> eval_wind_rule(std::string_view station_id, const SensorWindow& speed_window,
                                    const SensorWindow& direction_window,
                                    const RuleConfig& config, Suppressor& suppressor, SimTime now,
                                    IdGenerator& ids, std::optional<GeoPoint> geo) {
  const double dspeed = speed_change(speed_window.samples());
  const double span = circular_span(direction_window.samples());
  if (!wind_rule_holds(dspeed, span, config.thresholds)) return std::nullopt;
  if (suppressor.suppressed(station_id, now)) return std::nullopt;
  suppressor.record(station_id, now);

  Attributes attrs{
      {"station", std::string(station_id)},
      {"speed_change", dspeed},
      {"direction_span", span},
  };
  if (auto s = speed_window.latest()) attrs.emplace("speed", s->value);
  if (auto d = direction_window.latest()) attrs.emplace("direction", d->value);
  return make_event(std::string(etypes::kAlertMF), "dcep", now, std::move(attrs), geo, ids);
}

std::optional<Event> eval_confinement_trigger(const HistorySource& history, SimTime now,
                                              const RuleConfig& config, IdGenerator& ids) {
  Pattern p = Pattern::of_type(etypes::kRadiationMeasure);
  p.where("value", CompareOp::Gt, config.thresholds.v_plus);
  const auto hits = history.query_history(std::max(kEpoch, now - config.confinement_window), now, p);
  std::set<std::string> sensors;
  for (const auto& e : hits) sensors.insert(e.source);
  if (static_cast<int>(sensors.size()) < config.confinement_sensor_count) return std::nullopt;

  std::string joined;
  for (const auto& s : sensors) joined += (joined.empty() ? "" : ",") + s;
  return make_event(std::string(etypes::kSuggestConfinement), "dcep", now,
                    {{"sensors", joined},
                     {"sensor_count", static_cast<std::int64_t>(sensors.size())},
                     {"measure_count", static_cast<std::int64_t>(hits.size())}},
                    std::nullopt, ids);
}

std::optional<Event> eval_cascade(const Event& e, IdGenerator& ids) {
  std::string_view out_type;
  if (e.etype == etypes::kConfinementDecision) {
    out_type = etypes::kAlertPoliceRepresentative;
  } else if (e.etype == etypes::kConfinementPlanValidated) {
    out_type = etypes::kAlertOfficeOfInfrastructure;
  } else {
    return std::nullopt;
  }
  return make_event(std::string(out_type), "dcep", e.ts, e.attrs, std::nullopt, ids);
}

std::string_view to_string(ZoneClass z) {
  switch (z) {
    case ZoneClass::Normal: return "Normal";
    case ZoneClass::ControlZone: return "ControlZone";
    case ZoneClass::ConfineAndIodine: return "ConfineAndIodine";
    case ZoneClass::Evacuate: return "Evacuate";
  }
  return "?";
}

ZoneClass classify_barrier(double dose_rate, double cumulative_dose, const Thresholds& t) {
  if (dose_rate < 0.0 || cumulative_dose < 0.0) {
    throw std::invalid_argument("dose values must be >= 0");
  }
  if (cumulative_dose > t.evac_cumulative) return ZoneClass::Evacuate;
  if (dose_rate > t.v_plus) return ZoneClass::ConfineAndIodine;
  if (dose_rate > t.control_zone) return ZoneClass::ControlZone;
  return ZoneClass::Normal;
}

Event build_report(const HistorySource& history, SimTime now, const RuleConfig& config,
                   IdGenerator& ids) {
  const SimTime from = std::max(kEpoch, now - config.report_window);
  const auto measures =
      history.query_history(from, now, Pattern::of_type(etypes::kRadiationMeasure));

  nlohmann::json series = nlohmann::json::object();
  double max_value = 0.0;
  for (const auto& m : measures) {
    const double v = m.number("value").value_or(0.0);
    max_value = std::max(max_value, v);
    series[m.source].push_back(nlohmann::json::array({m.ts.count(), v}));
  }
  const auto sensor_count = static_cast<std::int64_t>(series.size());
  return make_event(std::string(etypes::kReport), "dcep", now,
                    {{"kind", std::string("rsn-graph")},
                     {"window_from", static_cast<std::int64_t>(from.count())},
                     {"window_to", static_cast<std::int64_t>(now.count())},
                     {"sensor_count", sensor_count},
                     {"sample_count", static_cast<std::int64_t>(measures.size())},
                     {"max_value", max_value},
                     {"zone", std::string(to_string(classify_barrier(max_value, 0.0,
                                                                     config.thresholds)))},
                     {"series", series.dump()}},
                    std::nullopt, ids);
}

}  // namespace emcloud::cep
