#pragma once

// JSON helpers shared by the scenario and process-definition loaders.

#include <string>
#include <string_view>

#include <json.hpp>

#include "emcloud/event.hpp"
#include "emcloud/flow/process.hpp"
#include "emcloud/pattern.hpp"

namespace emcloud::detail {

using json = nlohmann::json;

json parse_document(std::string_view text);

const json& require(const json& obj, const char* key, const std::string& path);
std::string require_string(const json& obj, const char* key, const std::string& path);
std::string as_string(const json& v, const std::string& path);
double as_number(const json& v, const std::string& path);
std::int64_t as_integer(const json& v, const std::string& path);

/// Integer milliseconds, or a string such as "30s", "5m", "1m30s", "t0+7m", "7:00".
Duration parse_duration(const json& v, const std::string& path);
Duration parse_duration_text(std::string_view text);

Scalar to_scalar(const json& v, const std::string& path);
Attributes to_attributes(const json& v, const std::string& path);

/// Pattern wire form, plus trigger sugar: "etype" may be a single string,
/// "where" may be an object of equality predicates, and
/// {"decision": "opt"} matches DecisionChoice events choosing option "opt".
Pattern to_pattern(const json& v, const std::string& path);

flow::ProcessDefinition to_process(const json& v, const std::string& path);

}  // namespace emcloud::detail
