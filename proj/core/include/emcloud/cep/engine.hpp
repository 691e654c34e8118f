#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emcloud/cep/rules.hpp"
#include "emcloud/event.hpp"
#include "emcloud/history.hpp"

namespace emcloud::cep {

/// Deterministic CEP engine over one ordered stream.
///
/// Not thread-safe: on_event and on_tick must be driven by a single
/// logical consumer. Derived events are returned, not published; the
/// caller owns publication.
class Engine {
 public:
  Engine(RuleConfig config, const HistorySource& history, IdGenerator& ids);

  /// Feeds one event. Throws OutOfOrder if `e.ts` regresses beyond the
  /// configured slack. Derived events carry ts = now and source "dcep".
  std::vector<Event> on_event(const Event& e, SimTime now);

  /// Minute-boundary tick: periodic report and confinement trigger on
  /// report-period multiples.
  std::vector<Event> on_tick(SimTime now);

  /// True on sar-period multiples (t0 excluded).
  bool sar_tick_due(SimTime now) const;

  const RuleConfig& config() const { return config_; }
  double cumulative_dose(const std::string& sensor) const;

 private:
  struct RadiationState {
    SensorWindow window;
    double cumulative_dose = 0.0;  // mSv
    std::optional<SimTime> last_ts;
  };
  struct WindState {
    SensorWindow speed;
    SensorWindow direction;
  };

  std::vector<Event> on_radiation(const Event& e, SimTime now);
  std::vector<Event> on_wind(const Event& e, SimTime now);

  RuleConfig config_;
  const HistorySource& history_;
  IdGenerator& ids_;
  std::map<std::string, RadiationState> radiation_;
  std::map<std::string, WindState> wind_;
  Suppressor radiation_suppressor_;
  Suppressor wind_suppressor_;
  Suppressor confinement_suppressor_;
  std::optional<SimTime> last_ts_;
};

}  // namespace emcloud::cep
