#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emcloud/event.hpp"
#include "emcloud/scenario/script.hpp"

namespace emcloud::scenario {

struct Sensor {
  std::string id;
  std::size_t index = 0;
  GeoPoint position;
};

/// Runtime state of one sensor group: how many sensors are active and
/// where they sit. Positions depend only on (seed, group id, index).
class SensorGroup {
 public:
  SensorGroup(SensorGroupSpec spec, std::uint64_t seed);

  const SensorGroupSpec& spec() const { return spec_; }
  const std::string& id() const { return spec_.id; }
  std::size_t active() const { return sensors_.size(); }
  const std::vector<Sensor>& sensors() const { return sensors_; }

  /// Program value for the sensor at `index`, overrides applied.
  double value(std::string_view program, std::size_t index, SimTime t) const;

  /// Events for sensors [first, last) at `now`.
  std::vector<Event> emit(SimTime now, std::size_t first, std::size_t last, IdGenerator& ids) const;

  /// Appends sensors; returns the index of the first new one.
  std::size_t grow(std::size_t additional);

 private:
  Sensor make_sensor(std::size_t index) const;

  SensorGroupSpec spec_;
  std::uint64_t seed_;
  std::vector<Sensor> sensors_;
  std::vector<std::vector<bool>> override_members_;  // per program override, per index
  std::vector<std::string> override_programs_;
};

/// One event per active sensor (two per weather station) when `now` is a
/// cadence multiple; otherwise none.
std::vector<Event> sensor_tick(const SensorGroup& group, SimTime now, IdGenerator& ids);

/// Throws std::invalid_argument when additional_count < 1.
void activate_sensors(SensorGroup& group, std::size_t additional_count, SimTime now);

}  // namespace emcloud::scenario
