#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emcloud/event.hpp"
#include "emcloud/history.hpp"

namespace emcloud::cep {

using namespace std::chrono_literals;

/// Rule thresholds. Dose rates in mSv/h, dose-rate slopes in mSv/h per
/// minute, wind speed changes in km/h per window, direction spans in degrees.
struct Thresholds {
  double v_plus = 2.0;
  double v_minus = 1.0;
  double s = 0.2;
  double d_wi = 30.0;
  double d_wd = 45.0;
  double control_zone = 0.025;
  double evac_cumulative = 50.0;  // mSv

  void validate() const;
};

enum class RuleKind {
  RadiationAlert,
  WindAlert,
  PeriodicReport,
  ConfinementTrigger,
  ConfinementCascade,
  PlanCascade,
  ResourceGapCheck,
  StatusGapCheck,
  BarrierClassification,
};

std::string_view to_string(RuleKind k);

struct RuleSpec {
  std::string rule_id;
  RuleKind kind = RuleKind::RadiationAlert;
  Duration window{0};
  Duration period{0};
  Duration suppression{0};

  void validate() const;
};

struct RuleConfig {
  Thresholds thresholds;
  Duration radiation_window = 6min;  // slope fit span; the slope is undefined until filled
  Duration wind_window = 2min;
  Duration suppression = 5min;
  Duration report_period = 5min;
  Duration report_window = 5min;
  Duration confinement_window = 5min;
  int confinement_sensor_count = 3;
  Duration sar_period = 10min;
  Duration out_of_order_slack = 0ms;

  /// The standard rule table derived from this configuration.
  std::vector<RuleSpec> rules() const;
  void validate() const;
};

struct Sample {
  SimTime ts;
  double value = 0.0;

  bool operator==(const Sample&) const = default;
};

/// Trailing samples of one source, sorted by ts.
class SensorWindow {
 public:
  /// Appends a sample; ts must not precede the newest sample.
  void push(SimTime ts, double value);
  /// Drops samples older than now - window.
  void trim(SimTime now, Duration window);

  std::span<const Sample> samples() const { return samples_; }
  std::optional<Sample> latest() const;
  bool empty() const { return samples_.empty(); }
  std::size_t size() const { return samples_.size(); }

 private:
  std::vector<Sample> samples_;
};

/// Ordinary-least-squares slope of value against ts (in minutes).
/// Returns nullopt while the samples span less than `required_span`.
/// Throws InsufficientSamples for fewer than two samples or a zero ts spread.
std::optional<double> estimate_slope(std::span<const Sample> samples,
                                     Duration required_span = Duration{0});

/// value > v+  OR  (value > v-  AND  slope defined AND slope > s)
bool radiation_rule_holds(double value, std::optional<double> slope, const Thresholds& t);

/// max - min over the window (0 for an empty window).
double speed_change(std::span<const Sample> speeds);

/// Smallest arc, in degrees, that contains every direction sample.
double circular_span(std::span<const Sample> directions);

bool wind_rule_holds(double speed_delta, double direction_span, const Thresholds& t);

/// Per-key "fired recently" memory for alert de-duplication.
class Suppressor {
 public:
  explicit Suppressor(Duration window = 5min) : window_(window) {}

  bool suppressed(std::string_view key, SimTime now) const;
  void record(std::string_view key, SimTime now);

 private:
  Duration window_;
  std::map<std::string, SimTime, std::less<>> last_;
};

/// Evaluates the radiation rule for one sensor's window. When it holds and
/// the sensor is not suppressed, records the firing and returns an AlertRSN.
std::optional<Event> eval_radiation_rule(std::string_view sensor_id, const SensorWindow& window,
                                         const RuleConfig& config, Suppressor& suppressor,
                                         SimTime now, IdGenerator& ids,
                                         std::optional<GeoPoint> geo = std::nullopt);

std::optional<Event> eval_wind_rule(std::string_view station_id, const SensorWindow& speed_window,
                                    const SensorWindow& direction_window,
                                    const RuleConfig& config, Suppressor& suppressor, SimTime now,
                                    IdGenerator& ids, std::optional<GeoPoint> geo = std::nullopt);

/// SuggestConfinement iff at least `confinement_sensor_count` distinct
/// sensors reported a value above v+ within [now - confinement_window, now).
std::optional<Event> eval_confinement_trigger(const HistorySource& history, SimTime now,
                                              const RuleConfig& config, IdGenerator& ids);

/// ConfinementDecision -> AlertPoliceRepresentative,
/// ConfinementPlanValidated -> AlertOfficeOfInfrastructure (attrs verbatim).
std::optional<Event> eval_cascade(const Event& e, IdGenerator& ids);

enum class ZoneClass { Normal, ControlZone, ConfineAndIodine, Evacuate };

std::string_view to_string(ZoneClass z);

ZoneClass classify_barrier(double dose_rate, double cumulative_dose, const Thresholds& t);

/// Report event holding the per-sensor radiation series of
/// [now - report_window, now) as a nested canonical document.
Event build_report(const HistorySource& history, SimTime now, const RuleConfig& config,
                   IdGenerator& ids);

}  // namespace emcloud::cep
