#include "emcloud/scenario/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "emcloud/pattern.hpp"

namespace emcloud::scenario {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string sensor_id(const std::string& group, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "-%03zu", index + 1);
  return group + buf;
}

// Keeps coordinates to 1e-6 degrees so logs stay short and stable.
double round6(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace

SensorGroup::SensorGroup(SensorGroupSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), seed_(seed) {
  for (std::size_t i = 0; i < spec_.count; ++i) sensors_.push_back(make_sensor(i));

  // Resolve override membership against the initial sensor set.
  std::vector<std::size_t> by_distance(sensors_.size());
  for (std::size_t i = 0; i < by_distance.size(); ++i) by_distance[i] = i;
  std::stable_sort(by_distance.begin(), by_distance.end(), [&](std::size_t a, std::size_t b) {
    return great_circle_km(sensors_[a].position, spec_.placement.center) <
           great_circle_km(sensors_[b].position, spec_.placement.center);
  });
  for (const auto& [name, program] : spec_.programs) {
    for (const auto& ov : program.overrides) {
      std::vector<bool> members(sensors_.size(), false);
      for (auto idx : ov.sensors.indices) {
        if (idx < members.size()) members[idx] = true;
      }
      if (ov.sensors.nearest) {
        const auto n = std::min(*ov.sensors.nearest, by_distance.size());
        for (std::size_t k = 0; k < n; ++k) members[by_distance[k]] = true;
      }
      override_members_.push_back(std::move(members));
      override_programs_.push_back(name);
    }
  }
}

Sensor SensorGroup::make_sensor(std::size_t index) const {
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(fnv1a(spec_.id)),
                    static_cast<std::uint32_t>(fnv1a(spec_.id) >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  const auto& pl = spec_.placement;
  std::uniform_real_distribution<double> bearing(pl.sector_from_deg, pl.sector_to_deg);
  // Uniform over the annulus area.
  std::uniform_real_distribution<double> area(pl.inner_radius_km * pl.inner_radius_km,
                                              pl.radius_km * pl.radius_km);
  const double b = bearing(rng);
  const double r = std::sqrt(area(rng));
  const auto p = destination_point(pl.center, b, r);
  return {sensor_id(spec_.id, index), index, {round6(p.lat), round6(p.lon)}};
}

double SensorGroup::value(std::string_view program, std::size_t index, SimTime t) const {
  auto it = spec_.programs.find(program);
  if (it == spec_.programs.end()) return 0.0;
  std::size_t k = 0;
  for (const auto& [name, prog] : spec_.programs) {
    for (const auto& ov : prog.overrides) {
      const auto& members = override_members_[k++];
      if (name != program) continue;
      if (t >= ov.from && t < ov.until && index < members.size() && members[index]) {
        return ov.shape.at(t - ov.from);
      }
    }
  }
  return it->second.base(t);
}

std::vector<Event> SensorGroup::emit(SimTime now, std::size_t first, std::size_t last,
                                     IdGenerator& ids) const {
  std::vector<Event> out;
  last = std::min(last, sensors_.size());
  for (std::size_t i = first; i < last; ++i) {
    const auto& s = sensors_[i];
    if (spec_.kind == SensorKind::Radiation) {
      out.push_back(make_event(std::string(etypes::kRadiationMeasure), s.id, now,
                               {{"value", value("value", i, now)}, {"unit", std::string("mSv/h")},
                                {"group", spec_.id}},
                               s.position, ids));
    } else {
      double direction = std::fmod(value("direction", i, now), 360.0);
      if (direction < 0) direction += 360.0;
      out.push_back(make_event(std::string(etypes::kWindSpeedMeasure), s.id, now,
                               {{"speed", value("speed", i, now)}, {"unit", std::string("km/h")},
                                {"group", spec_.id}},
                               s.position, ids));
      out.push_back(make_event(std::string(etypes::kWindDirectionMeasure), s.id, now,
                               {{"direction", direction}, {"unit", std::string("deg")},
                                {"group", spec_.id}},
                               s.position, ids));
    }
  }
  return out;
}

std::size_t SensorGroup::grow(std::size_t additional) {
  const std::size_t first = sensors_.size();
  for (std::size_t i = 0; i < additional; ++i) sensors_.push_back(make_sensor(first + i));
  return first;
}

std::vector<Event> sensor_tick(const SensorGroup& group, SimTime now, IdGenerator& ids) {
  const auto cadence = group.spec().cadence.count();
  if (cadence <= 0 || now.count() % cadence != 0) return {};
  return group.emit(now, 0, group.active(), ids);
}

void activate_sensors(SensorGroup& group, std::size_t additional_count, SimTime) {
  if (additional_count < 1) throw std::invalid_argument("activate_sensors needs at least one sensor");
  group.grow(additional_count);
}

}  // namespace emcloud::scenario
