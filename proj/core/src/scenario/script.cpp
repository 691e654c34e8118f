#include "emcloud/scenario/script.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "detail/json_util.hpp"
#include "emcloud/errors.hpp"

#ifndef EMCLOUD_DATA_DIR
#define EMCLOUD_DATA_DIR "data"
#endif

namespace emcloud::scenario {

namespace {

using detail::json;

std::string at_index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

const json& require_array(const json& obj, const char* key, const std::string& path) {
  const auto& v = detail::require(obj, key, path);
  if (!v.is_array()) throw SchemaError(path + "." + key, "expected an array");
  return v;
}

const json* optional_array(const json& obj, const char* key, const std::string& path) {
  if (!obj.contains(key)) return nullptr;
  const auto& v = obj[key];
  if (!v.is_array()) throw SchemaError(path + "." + key, "expected an array");
  return &v;
}

SimTime time_of(const json& v, const std::string& path) {
  const auto d = detail::parse_duration(v, path);
  if (d.count() < 0) throw SchemaError(path, "time must not be negative");
  return SimTime{d};
}

std::size_t as_count(const json& v, const std::string& path) {
  const auto n = detail::as_integer(v, path);
  if (n < 0) throw SchemaError(path, "expected a non-negative integer");
  return static_cast<std::size_t>(n);
}

GeoPoint to_geo(const json& v, const std::string& path) {
  return {detail::as_number(detail::require(v, "lat", path), path + ".lat"),
          detail::as_number(detail::require(v, "lon", path), path + ".lon")};
}

Shape to_shape(const json& v, const std::string& path) {
  Shape s;
  if (v.contains("constant")) {
    s.kind = Shape::Kind::Constant;
    s.v0 = detail::as_number(v["constant"], path + ".constant");
  } else if (v.contains("ramp")) {
    const auto& r = v["ramp"];
    s.kind = Shape::Kind::Ramp;
    s.v0 = detail::as_number(detail::require(r, "v0", path + ".ramp"), path + ".ramp.v0");
    s.slope_per_min = detail::as_number(detail::require(r, "slope", path + ".ramp"), path + ".ramp.slope");
  } else {
    throw SchemaError(path, "expected \"constant\" or \"ramp\"");
  }
  return s;
}

ValueProgram to_program(const json& v, const std::string& path) {
  ValueProgram p;
  const auto& segs = require_array(v, "segments", path);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto sp = at_index(path + ".segments", i);
    Segment s;
    s.from = time_of(detail::require(segs[i], "from", sp), sp + ".from");
    if (segs[i].contains("until")) s.until = time_of(segs[i]["until"], sp + ".until");
    s.shape = to_shape(segs[i], sp);
    p.segments.push_back(s);
  }
  if (const auto* ovs = optional_array(v, "overrides", path)) {
    for (std::size_t i = 0; i < ovs->size(); ++i) {
      const auto op = at_index(path + ".overrides", i);
      const auto& o = (*ovs)[i];
      Override ov;
      ov.from = time_of(detail::require(o, "from", op), op + ".from");
      ov.until = time_of(detail::require(o, "until", op), op + ".until");
      if (o.contains("nearest")) ov.sensors.nearest = as_count(o["nearest"], op + ".nearest");
      if (o.contains("sensors")) {
        const auto& idx = o["sensors"];
        if (!idx.is_array()) throw SchemaError(op + ".sensors", "expected an array of indices");
        for (std::size_t k = 0; k < idx.size(); ++k) {
          ov.sensors.indices.push_back(as_count(idx[k], at_index(op + ".sensors", k)));
        }
      }
      if (!ov.sensors.nearest && ov.sensors.indices.empty()) {
        throw SchemaError(op, "override needs \"nearest\" or \"sensors\"");
      }
      ov.shape = to_shape(o, op);
      p.overrides.push_back(std::move(ov));
    }
  }
  return p;
}

SensorKind to_sensor_kind(const std::string& s, const std::string& path) {
  if (s == "Radiation") return SensorKind::Radiation;
  if (s == "Weather") return SensorKind::Weather;
  throw SchemaError(path, "unknown sensor kind '" + s + "' (expected Radiation or Weather)");
}

SensorGroupSpec to_group(const json& v, const std::string& path) {
  SensorGroupSpec g;
  g.id = detail::require_string(v, "id", path);
  g.kind = to_sensor_kind(detail::require_string(v, "kind", path), path + ".kind");
  g.count = v.contains("count") ? as_count(v["count"], path + ".count") : 0;
  if (v.contains("cadence")) g.cadence = detail::parse_duration(v["cadence"], path + ".cadence");
  const auto& pl = detail::require(v, "placement", path);
  const std::string pp = path + ".placement";
  g.placement.center = to_geo(detail::require(pl, "center", pp), pp + ".center");
  g.placement.radius_km = detail::as_number(detail::require(pl, "radius_km", pp), pp + ".radius_km");
  if (pl.contains("inner_radius_km")) {
    g.placement.inner_radius_km = detail::as_number(pl["inner_radius_km"], pp + ".inner_radius_km");
  }
  if (pl.contains("sector")) {
    const auto& sec = pl["sector"];
    if (!sec.is_array() || sec.size() != 2) throw SchemaError(pp + ".sector", "expected [from_deg, to_deg]");
    g.placement.sector_from_deg = detail::as_number(sec[0], pp + ".sector[0]");
    g.placement.sector_to_deg = detail::as_number(sec[1], pp + ".sector[1]");
  }
  if (v.contains("program")) {
    g.programs.emplace("value", to_program(v["program"], path + ".program"));
  }
  if (v.contains("programs")) {
    const auto& ps = v["programs"];
    if (!ps.is_object()) throw SchemaError(path + ".programs", "expected an object");
    for (auto it = ps.begin(); it != ps.end(); ++it) {
      g.programs.insert_or_assign(it.key(), to_program(it.value(), path + ".programs." + it.key()));
    }
  }
  return g;
}

EventSpec to_event_spec(const json& v, const std::string& path) {
  EventSpec e;
  e.etype = detail::require_string(v, "etype", path);
  e.source = detail::require_string(v, "source", path);
  if (v.contains("attrs")) e.attrs = detail::to_attributes(v["attrs"], path + ".attrs");
  if (v.contains("geo")) e.geo = to_geo(v["geo"], path + ".geo");
  return e;
}

Injection to_injection(const json& v, const std::string& path) {
  Injection inj;
  inj.at = time_of(detail::require(v, "at", path), path + ".at");
  if (v.contains("event")) {
    inj.kind = Injection::Kind::Event;
    inj.event = to_event_spec(v["event"], path + ".event");
  } else if (v.contains("field_loss")) {
    const auto& f = v["field_loss"];
    const auto p = path + ".field_loss";
    inj.kind = Injection::Kind::FieldLoss;
    inj.reservation = detail::require_string(f, "reservation", p);
    inj.quantity = detail::as_integer(detail::require(f, "quantity", p), p + ".quantity");
  } else if (v.contains("release")) {
    const auto& f = v["release"];
    inj.kind = Injection::Kind::Release;
    inj.reservation = detail::require_string(f, "reservation", path + ".release");
  } else if (v.contains("activate")) {
    const auto& f = v["activate"];
    const auto p = path + ".activate";
    inj.kind = Injection::Kind::Activate;
    inj.group = detail::require_string(f, "group", p);
    inj.quantity = detail::as_integer(detail::require(f, "count", p), p + ".count");
  } else if (v.contains("request_resources")) {
    const auto& f = v["request_resources"];
    const auto p = path + ".request_resources";
    inj.kind = Injection::Kind::RequestResources;
    inj.resource_kind = detail::require_string(f, "kind", p);
    inj.quantity = detail::as_integer(detail::require(f, "quantity", p), p + ".quantity");
    inj.holder = detail::require_string(f, "holder", p);
  } else {
    throw SchemaError(path, "expected one of event, field_loss, release, activate, request_resources");
  }
  return inj;
}

EffectSpec to_effect(const json& v, const std::string& path) {
  EffectSpec e;
  if (v.contains("activate")) {
    const auto& f = v["activate"];
    const auto p = path + ".activate";
    e.kind = EffectSpec::Kind::Activate;
    e.group = detail::require_string(f, "group", p);
    e.count = detail::as_integer(detail::require(f, "count", p), p + ".count");
  } else if (v.contains("request_resources")) {
    const auto& f = v["request_resources"];
    const auto p = path + ".request_resources";
    e.kind = EffectSpec::Kind::RequestResources;
    e.resource_kind = detail::require_string(f, "kind", p);
    e.quantity = detail::as_integer(detail::require(f, "quantity", p), p + ".quantity");
    e.holder = detail::require_string(f, "holder", p);
  } else if (v.contains("emit")) {
    const auto& f = v["emit"];
    const auto p = path + ".emit";
    e.kind = EffectSpec::Kind::Emit;
    e.event.etype = detail::require_string(f, "etype", p);
    if (f.contains("source")) e.event.source = detail::as_string(f["source"], p + ".source");
    if (f.contains("attrs")) e.event.attrs = detail::to_attributes(f["attrs"], p + ".attrs");
  } else {
    throw SchemaError(path, "expected one of activate, request_resources, emit");
  }
  return e;
}

DecisionPointSpec to_point(const json& v, const std::string& path) {
  DecisionPointSpec d;
  d.id = detail::require_string(v, "id", path);
  d.role = detail::require_string(v, "role", path);
  d.prompt = v.contains("prompt") ? detail::as_string(v["prompt"], path + ".prompt") : d.id;
  d.trigger = detail::to_pattern(detail::require(v, "trigger", path), path + ".trigger");
  if (v.contains("proposal")) d.proposal = v["proposal"].get<bool>();
  if (const auto* opts = optional_array(v, "options", path)) {
    for (std::size_t i = 0; i < opts->size(); ++i) {
      const auto op = at_index(path + ".options", i);
      const auto& o = (*opts)[i];
      OptionSpec spec;
      spec.id = detail::require_string(o, "id", op);
      spec.label = o.contains("label") ? detail::as_string(o["label"], op + ".label") : spec.id;
      if (const auto* effs = optional_array(o, "effects", op)) {
        for (std::size_t k = 0; k < effs->size(); ++k) {
          spec.effects.push_back(to_effect((*effs)[k], at_index(op + ".effects", k)));
        }
      }
      d.options.push_back(std::move(spec));
    }
  }
  if (v.contains("scripted_choice")) {
    d.scripted_choice = detail::as_string(v["scripted_choice"], path + ".scripted_choice");
  }
  if (v.contains("scripted_delay")) {
    d.scripted_delay = detail::parse_duration(v["scripted_delay"], path + ".scripted_delay");
  }
  return d;
}

Period to_period(const json& v, const std::string& path) {
  Period p;
  p.name = detail::require_string(v, "name", path);
  p.from = time_of(detail::require(v, "from", path), path + ".from");
  p.to = time_of(detail::require(v, "to", path), path + ".to");
  if (v.contains("expected_rate")) p.expected_rate = detail::as_integer(v["expected_rate"], path + ".expected_rate");
  return p;
}

Duration rule_duration(const json& rules, const char* key, Duration fallback, const std::string& path) {
  return rules.contains(key) ? detail::parse_duration(rules[key], path + "." + key) : fallback;
}

cep::RuleConfig to_rules(const json& v, const std::string& path) {
  cep::RuleConfig c;
  if (!v.is_object()) throw SchemaError(path, "expected an object");
  c.radiation_window = rule_duration(v, "radiation_window", c.radiation_window, path);
  c.wind_window = rule_duration(v, "wind_window", c.wind_window, path);
  c.suppression = rule_duration(v, "suppression", c.suppression, path);
  c.report_period = rule_duration(v, "report_period", c.report_period, path);
  c.report_window = rule_duration(v, "report_window", c.report_window, path);
  c.confinement_window = rule_duration(v, "confinement_window", c.confinement_window, path);
  c.sar_period = rule_duration(v, "sar_period", c.sar_period, path);
  c.out_of_order_slack = rule_duration(v, "out_of_order_slack", c.out_of_order_slack, path);
  if (v.contains("confinement_sensor_count")) {
    c.confinement_sensor_count =
        static_cast<int>(detail::as_integer(v["confinement_sensor_count"], path + ".confinement_sensor_count"));
  }
  if (v.contains("thresholds")) {
    const auto& t = v["thresholds"];
    const auto tp = path + ".thresholds";
    auto num = [&](const char* key, double& out) {
      if (t.contains(key)) out = detail::as_number(t[key], tp + "." + key);
    };
    num("v_plus", c.thresholds.v_plus);
    num("v_minus", c.thresholds.v_minus);
    num("s", c.thresholds.s);
    num("d_wi", c.thresholds.d_wi);
    num("d_wd", c.thresholds.d_wd);
    num("control_zone", c.thresholds.control_zone);
    num("evac_cumulative", c.thresholds.evac_cumulative);
  }
  return c;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool on_grid(Duration d, Duration tick) { return tick.count() > 0 && d.count() % tick.count() == 0; }

void validate_program(const ValueProgram& p, const std::string& where) {
  if (p.segments.empty()) throw SemanticError(where + ": program has no segments");
  if (p.segments.front().from != SimTime{0}) {
    throw SemanticError(where + ": first segment must start at t0");
  }
  for (std::size_t i = 0; i < p.segments.size(); ++i) {
    const auto& s = p.segments[i];
    if (s.until && *s.until <= s.from) {
      throw SemanticError(where + ": segment " + std::to_string(i) + " ends before it starts");
    }
    if (i + 1 < p.segments.size()) {
      const auto& next = p.segments[i + 1];
      if (next.from <= s.from) {
        throw SemanticError(where + ": segments " + std::to_string(i) + " and " + std::to_string(i + 1) +
                            " are out of order or overlap");
      }
      if (s.until && *s.until > next.from) {
        throw SemanticError(where + ": segments " + std::to_string(i) + " and " + std::to_string(i + 1) +
                            " overlap");
      }
    }
  }
  for (std::size_t i = 0; i < p.overrides.size(); ++i) {
    if (p.overrides[i].until <= p.overrides[i].from) {
      throw SemanticError(where + ": override " + std::to_string(i) + " has an empty interval");
    }
  }
}

}  // namespace

std::string_view to_string(SensorKind k) {
  return k == SensorKind::Radiation ? "Radiation" : "Weather";
}

double Shape::at(Duration since_start) const {
  if (kind == Kind::Constant) return v0;
  return v0 + slope_per_min * static_cast<double>(since_start.count()) / 60000.0;
}

double ValueProgram::base(SimTime t) const {
  const Segment* current = nullptr;
  for (const auto& s : segments) {
    if (s.from <= t) current = &s;
  }
  if (current == nullptr) return segments.empty() ? 0.0 : segments.front().shape.v0;
  return current->shape.at(t - current->from);
}

const OptionSpec* DecisionPointSpec::option(std::string_view oid) const {
  for (const auto& o : options) {
    if (o.id == oid) return &o;
  }
  return nullptr;
}

const SensorGroupSpec* ScenarioScript::group(std::string_view gid) const {
  for (const auto& g : sensor_groups) {
    if (g.id == gid) return &g;
  }
  return nullptr;
}

void ScenarioScript::validate(bool scripted) const {
  if (tick.count() <= 0) throw SemanticError("tick must be positive");
  if (end_ts.count() < 0) throw SemanticError("end must not be negative");
  if (n_shards == 0) throw SemanticError("shards must be at least 1");
  try {
    rules.validate();
  } catch (const Error& ex) {
    throw SemanticError(std::string("rules: ") + ex.what());
  }

  std::set<std::string, std::less<>> group_ids;
  for (const auto& g : sensor_groups) {
    const std::string where = "sensor group '" + g.id + "'";
    if (!group_ids.insert(g.id).second) throw SemanticError("duplicate " + where);
    if (g.cadence.count() <= 0 || !on_grid(g.cadence, tick)) {
      throw SemanticError(where + ": cadence must be a positive multiple of the tick");
    }
    if (g.placement.radius_km < g.placement.inner_radius_km || g.placement.inner_radius_km < 0) {
      throw SemanticError(where + ": invalid placement radii");
    }
    const std::vector<std::string> needed = g.kind == SensorKind::Radiation
                                                ? std::vector<std::string>{"value"}
                                                : std::vector<std::string>{"speed", "direction"};
    for (const auto& name : needed) {
      auto it = g.programs.find(name);
      if (it == g.programs.end()) throw SemanticError(where + ": missing program '" + name + "'");
      validate_program(it->second, where + " program '" + name + "'");
    }
  }

  for (std::size_t i = 0; i < injections.size(); ++i) {
    const auto& inj = injections[i];
    const std::string where = "injection " + std::to_string(i);
    if (inj.at > end_ts) throw SemanticError(where + ": time is after the scenario end");
    if (!on_grid(Duration{inj.at.count()}, tick)) {
      throw SemanticError(where + ": time is not a multiple of the tick");
    }
    if (inj.kind == Injection::Kind::Activate) {
      if (!group_ids.contains(inj.group)) throw SemanticError(where + ": unknown group '" + inj.group + "'");
      if (inj.quantity < 1) throw SemanticError(where + ": activation count must be at least 1");
    }
    if (inj.kind == Injection::Kind::Event && inj.event.etype.empty()) {
      throw SemanticError(where + ": event without a type");
    }
  }

  std::set<std::string, std::less<>> point_ids;
  for (const auto& p : decision_points) {
    const std::string where = "decision point '" + p.id + "'";
    if (!point_ids.insert(p.id).second) throw SemanticError("duplicate " + where);
    if (p.scripted_delay.count() < 0) throw SemanticError(where + ": negative scripted delay");
    if (p.scripted_delay.count() % tick.count() != 0) {
      throw SemanticError(where + ": scripted delay is not a multiple of the tick");
    }
    if (!p.proposal) {
      if (p.options.empty()) throw SemanticError(where + ": no options");
      std::set<std::string> opt_ids;
      for (const auto& o : p.options) {
        if (!opt_ids.insert(o.id).second) throw SemanticError(where + ": duplicate option '" + o.id + "'");
        for (const auto& e : o.effects) {
          if (e.kind == EffectSpec::Kind::Activate) {
            if (!group_ids.contains(e.group)) throw SemanticError(where + ": unknown group '" + e.group + "'");
            if (e.count < 1) throw SemanticError(where + ": activation count must be at least 1");
          }
          if (e.kind == EffectSpec::Kind::RequestResources && e.quantity < 1) {
            throw SemanticError(where + ": resource quantity must be at least 1");
          }
        }
      }
      if (p.scripted_choice && !opt_ids.contains(*p.scripted_choice)) {
        throw SemanticError(where + ": scripted choice '" + *p.scripted_choice + "' is not an option");
      }
    }
    if (scripted && !p.scripted_choice) {
      throw MissingScriptedChoice(where + " has no scripted choice");
    }
  }

  std::set<std::string> process_ids;
  for (const auto& def : processes) {
    if (!process_ids.insert(def.process_id).second) {
      throw SemanticError("duplicate process '" + def.process_id + "'");
    }
    if (auto v = def.violations(); !v.empty()) {
      std::string msg = "process '" + def.process_id + "':";
      for (const auto& s : v) msg += " " + s + ";";
      throw SemanticError(msg);
    }
  }

  for (const auto& [kind, total] : inventory) {
    if (total < 0) throw SemanticError("inventory '" + kind + "' is negative");
  }
  if (reservation_lead_time.count() < 0) throw SemanticError("negative reservation lead time");

  auto check_periods = [&](const std::vector<Period>& list, const char* what) {
    for (const auto& p : list) {
      if (p.to <= p.from) throw SemanticError(std::string(what) + " '" + p.name + "' is empty");
      if (p.to > end_ts) throw SemanticError(std::string(what) + " '" + p.name + "' ends after the scenario");
    }
  };
  check_periods(periods, "period");
  check_periods(phases, "phase");
  for (const auto& m : milestones) {
    if (m.at > end_ts) throw SemanticError("milestone '" + m.name + "' is after the scenario end");
  }
}

ScenarioScript load_scenario(std::string_view document, const std::filesystem::path& base_dir) {
  const auto doc = detail::parse_document(document);
  if (!doc.is_object()) throw SchemaError("$", "expected a scenario object");

  ScenarioScript s;
  s.name = doc.contains("name") ? detail::as_string(doc["name"], "$.name") : "scenario";
  if (doc.contains("epoch")) s.epoch_label = detail::as_string(doc["epoch"], "$.epoch");
  if (doc.contains("seed")) s.seed = static_cast<std::uint64_t>(detail::as_integer(doc["seed"], "$.seed"));
  if (doc.contains("tick")) s.tick = detail::parse_duration(doc["tick"], "$.tick");
  s.end_ts = time_of(detail::require(doc, "end", "$"), "$.end");
  if (doc.contains("shards")) s.n_shards = as_count(doc["shards"], "$.shards");
  if (doc.contains("rules")) s.rules = to_rules(doc["rules"], "$.rules");
  if (doc.contains("inventory")) {
    const auto& inv = doc["inventory"];
    if (!inv.is_object()) throw SchemaError("$.inventory", "expected an object");
    for (auto it = inv.begin(); it != inv.end(); ++it) {
      s.inventory[it.key()] = detail::as_integer(it.value(), "$.inventory." + it.key());
    }
  }
  if (doc.contains("reservation_lead_time")) {
    s.reservation_lead_time = detail::parse_duration(doc["reservation_lead_time"], "$.reservation_lead_time");
  }
  if (const auto* groups = optional_array(doc, "sensor_groups", "$")) {
    for (std::size_t i = 0; i < groups->size(); ++i) {
      s.sensor_groups.push_back(to_group((*groups)[i], at_index("$.sensor_groups", i)));
    }
  }
  if (const auto* inj = optional_array(doc, "injections", "$")) {
    for (std::size_t i = 0; i < inj->size(); ++i) {
      s.injections.push_back(to_injection((*inj)[i], at_index("$.injections", i)));
    }
  }
  if (const auto* pts = optional_array(doc, "decision_points", "$")) {
    for (std::size_t i = 0; i < pts->size(); ++i) {
      s.decision_points.push_back(to_point((*pts)[i], at_index("$.decision_points", i)));
    }
  }
  if (const auto* procs = optional_array(doc, "processes", "$")) {
    for (std::size_t i = 0; i < procs->size(); ++i) {
      const auto& p = (*procs)[i];
      const auto path = at_index("$.processes", i);
      if (p.is_string()) {
        std::filesystem::path file = p.get<std::string>();
        if (file.is_relative()) file = base_dir / file;
        for (auto& def : flow::load_process_file(file)) s.processes.push_back(std::move(def));
      } else {
        s.processes.push_back(detail::to_process(p, path));
      }
    }
  }
  if (const auto* periods = optional_array(doc, "periods", "$")) {
    for (std::size_t i = 0; i < periods->size(); ++i) {
      s.periods.push_back(to_period((*periods)[i], at_index("$.periods", i)));
    }
  }
  if (const auto* phases = optional_array(doc, "phases", "$")) {
    for (std::size_t i = 0; i < phases->size(); ++i) {
      s.phases.push_back(to_period((*phases)[i], at_index("$.phases", i)));
    }
  }
  if (const auto* ms = optional_array(doc, "milestones", "$")) {
    for (std::size_t i = 0; i < ms->size(); ++i) {
      const auto path = at_index("$.milestones", i);
      const auto& m = (*ms)[i];
      MilestoneSpec spec;
      spec.name = detail::require_string(m, "name", path);
      spec.pattern = detail::to_pattern(detail::require(m, "first", path), path + ".first");
      spec.at = time_of(detail::require(m, "at", path), path + ".at");
      s.milestones.push_back(std::move(spec));
    }
  }
  s.validate(false);
  return s;
}

ScenarioScript load_scenario_file(const std::filesystem::path& path) {
  return load_scenario(read_file(path), path.parent_path());
}

std::filesystem::path resolve_scenario(std::string_view name_or_path) {
  std::filesystem::path direct{std::string(name_or_path)};
  if (std::filesystem::is_regular_file(direct)) return direct;
  const char* env = std::getenv("EMCLOUD_DATA_DIR");  // relocated installs
  std::filesystem::path shipped = std::filesystem::path(env && *env ? env : EMCLOUD_DATA_DIR) / "scenarios" /
                                  (std::string(name_or_path) + ".scenario");
  if (std::filesystem::is_regular_file(shipped)) return shipped;
  throw Error("IoError", "no scenario file or shipped scenario named '" + std::string(name_or_path) + "'");
}

}  // namespace emcloud::scenario
