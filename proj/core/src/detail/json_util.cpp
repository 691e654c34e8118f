#include "detail/json_util.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "emcloud/errors.hpp"

namespace emcloud::detail {

json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end(), nullptr, /*allow_exceptions=*/true,
                       /*ignore_comments=*/true);
  } catch (const json::parse_error& ex) {
    throw SchemaError("$", std::string("document is not valid JSON: ") + ex.what());
  }
}

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "." + key, "required field is missing");
  return *it;
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError(path, "expected a string");
  return v.get<std::string>();
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
  return as_string(require(obj, key, path), path + "." + key);
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path, "expected a number");
  return v.get<double>();
}

std::int64_t as_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw SchemaError(path, "expected an integer");
  return v.get<std::int64_t>();
}

Duration parse_duration_text(std::string_view text) { return emcloud::parse_duration(text); }

Duration parse_duration(const json& v, const std::string& path) {
  if (v.is_number_integer()) return Duration{v.get<std::int64_t>()};
  if (v.is_string()) {
    try {
      return parse_duration_text(v.get<std::string>());
    } catch (const std::invalid_argument& ex) {
      throw SchemaError(path, ex.what());
    }
  }
  throw SchemaError(path, "expected a duration (integer ms or string like \"5m\")");
}

Scalar to_scalar(const json& v, const std::string& path) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>();
  if (v.is_object() || v.is_array()) return v.dump();  // nested documents travel as strings
  throw SchemaError(path, "expected a scalar value");
}

Attributes to_attributes(const json& v, const std::string& path) {
  if (!v.is_object()) throw SchemaError(path, "expected an object of attributes");
  Attributes out;
  for (auto it = v.begin(); it != v.end(); ++it) {
    out.emplace(it.key(), to_scalar(it.value(), path + "." + it.key()));
  }
  return out;
}

Pattern to_pattern(const json& v, const std::string& path) {
  if (!v.is_object()) throw SchemaError(path, "expected a pattern object");
  json norm = json::object();
  for (auto it = v.begin(); it != v.end(); ++it) {
    const auto& key = it.key();
    const auto& val = it.value();
    if (key == "decision") {
      norm["etype"] = json::array({std::string(etypes::kDecisionChoice)});
      norm["where"].push_back(json::array({"option", "==", as_string(val, path + ".decision")}));
    } else if ((key == "etype" || key == "source") && val.is_string()) {
      norm[key] = json::array({val});
    } else if (key == "where" && val.is_object()) {
      for (auto w = val.begin(); w != val.end(); ++w) {
        norm["where"].push_back(json::array({w.key(), "==", w.value()}));
      }
    } else if (key == "where" && val.is_array()) {
      for (const auto& w : val) norm["where"].push_back(w);
    } else {
      norm[key] = val;
    }
  }
  try {
    return decode_pattern(norm.dump());
  } catch (const InvalidPattern& ex) {
    throw SchemaError(path, ex.what());
  }
}

namespace {

flow::EventTemplate to_template(const json& v, const std::string& path) {
  flow::EventTemplate t;
  t.etype = require_string(v, "etype", path);
  if (v.contains("source")) t.source = as_string(v["source"], path + ".source");
  if (v.contains("attrs")) t.attrs = to_attributes(v["attrs"], path + ".attrs");
  return t;
}

}  // namespace

flow::ProcessDefinition to_process(const json& v, const std::string& path) {
  using namespace flow;
  if (!v.is_object()) throw SchemaError(path, "expected a process object");
  ProcessDefinition def;
  def.process_id = require_string(v, "id", path);
  def.name = v.contains("name") ? as_string(v["name"], path + ".name") : def.process_id;
  if (v.contains("level")) {
    try {
      def.level = parse_process_level(as_string(v["level"], path + ".level"));
    } catch (const std::invalid_argument& ex) {
      throw SchemaError(path + ".level", ex.what());
    }
  }
  if (v.contains("lanes")) {
    const auto& lanes = v["lanes"];
    if (!lanes.is_array()) throw SchemaError(path + ".lanes", "expected an array");
    for (std::size_t i = 0; i < lanes.size(); ++i) {
      def.lanes.push_back(as_string(lanes[i], path + ".lanes[" + std::to_string(i) + "]"));
    }
  }
  const auto& acts = require(v, "activities", path);
  if (!acts.is_array()) throw SchemaError(path + ".activities", "expected an array");
  for (std::size_t i = 0; i < acts.size(); ++i) {
    const std::string p = path + ".activities[" + std::to_string(i) + "]";
    const auto& a = acts[i];
    ActivityDef ad;
    ad.id = require_string(a, "id", p);
    ad.lane = a.contains("lane") ? as_string(a["lane"], p + ".lane") : std::string{};
    if (a.contains("planned_duration")) ad.planned_duration = parse_duration(a["planned_duration"], p + ".planned_duration");
    if (a.contains("start")) ad.start = a["start"].get<bool>();
    if (a.contains("instant")) ad.instant = a["instant"].get<bool>();
    def.activities.push_back(std::move(ad));
  }
  if (v.contains("transitions")) {
    const auto& ts = v["transitions"];
    if (!ts.is_array()) throw SchemaError(path + ".transitions", "expected an array");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const std::string p = path + ".transitions[" + std::to_string(i) + "]";
      const auto& t = ts[i];
      TransitionDef td;
      td.from = require_string(t, "from", p);
      td.to = require_string(t, "to", p);
      td.trigger = to_pattern(require(t, "on", p), p + ".on");
      if (t.contains("keep_source")) td.finish_source = !t["keep_source"].get<bool>();
      if (t.contains("emits")) {
        const auto& em = t["emits"];
        if (!em.is_array()) throw SchemaError(p + ".emits", "expected an array");
        for (std::size_t k = 0; k < em.size(); ++k) {
          td.emits.push_back(to_template(em[k], p + ".emits[" + std::to_string(k) + "]"));
        }
      }
      def.transitions.push_back(std::move(td));
    }
  }
  if (v.contains("start")) {
    const auto& s = v["start"];
    const std::string p = path + ".start";
    if (s.is_string() && s.get<std::string>() == "t0") {
      def.start.at_epoch = true;
    } else if (s.is_object()) {
      if (s.contains("on")) def.start.on = to_pattern(s["on"], p + ".on");
      if (s.contains("at_epoch")) def.start.at_epoch = s["at_epoch"].get<bool>();
      if (s.contains("repeat")) def.start.repeat = s["repeat"].get<bool>();
    } else {
      throw SchemaError(p, "expected \"t0\" or {\"on\": pattern}");
    }
  }
  return def;
}

}  // namespace emcloud::detail
