#include <chrono>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "detail/json_util.hpp"
#include "emcloud/errors.hpp"
#include "emcloud/gateway/server.hpp"
#include "emcloud/pattern.hpp"
#include "emcloud/scenario/metrics.hpp"

namespace emcloud::gateway {

namespace {

using ojson = nlohmann::ordered_json;

constexpr auto kChoiceAckTimeout = std::chrono::seconds(30);

ojson scalar_json(const Scalar& s) {
  return std::visit([](const auto& v) { return ojson(v); }, s);
}

ojson opt_ts(const std::optional<SimTime>& t) {
  return t ? ojson(t->count()) : ojson(nullptr);
}

HttpResponse json_response(int status, const ojson& j) { return {status, "application/json", j.dump()}; }

HttpResponse error_response(int status, std::string_view code, std::string_view message) {
  ojson j;
  j["error"] = code;
  j["message"] = message;
  return json_response(status, j);
}

HttpResponse processes(scenario::Runner& runner) {
  auto& orch = runner.orchestrator();
  const auto snap = orch.snapshot(runner.now());
  ojson j;
  j["taken_at"] = snap.taken_at.count();
  j["processes"] = ojson::array();
  for (const auto& pid : orch.process_ids()) {
    const auto& def = orch.process(pid);
    ojson p;
    p["id"] = def.process_id;
    p["name"] = def.name;
    p["level"] = flow::to_string(def.level);
    p["lanes"] = def.lanes;
    j["processes"].push_back(std::move(p));
  }
  j["instances"] = ojson::array();
  for (const auto& inst : snap.instances) {
    ojson i;
    i["instance"] = inst.instance_id;
    i["process"] = inst.process_id;
    i["started_ts"] = inst.started_ts.count();
    i["activities"] = ojson::array();
    for (const auto& a : inst.activities) {
      ojson aj;
      aj["id"] = a.activity_id;
      aj["lane"] = a.lane;
      aj["status"] = flow::to_string(a.status);
      aj["started_ts"] = opt_ts(a.started_ts);
      aj["intended_finish_ts"] = opt_ts(a.intended_finish_ts);
      aj["finished_ts"] = opt_ts(a.finished_ts);
      i["activities"].push_back(std::move(aj));
    }
    j["instances"].push_back(std::move(i));
  }
  return json_response(200, j);
}

HttpResponse inventory(scenario::Runner& runner) {
  const auto snap = runner.orchestrator().snapshot(runner.now());
  ojson j;
  j["taken_at"] = snap.taken_at.count();
  j["inventory"] = ojson::object();
  for (const auto& [kind, e] : snap.inventory) {
    j["inventory"][kind] = {{"total", e.total}, {"available", e.available}, {"committed", e.committed}};
  }
  j["reservations"] = ojson::array();
  for (const auto& r : snap.reservations) {
    ojson rj;
    rj["id"] = r.id;
    rj["kind"] = r.kind;
    rj["requested"] = r.requested;
    rj["committed"] = r.committed;
    rj["holder"] = r.holder;
    rj["confirmed_for_ts"] = r.confirmed_for_ts.count();
    rj["active"] = r.active;
    rj["delivered"] = r.delivered;
    j["reservations"].push_back(std::move(rj));
  }
  return json_response(200, j);
}

HttpResponse proposals(scenario::Runner& runner) {
  ojson j = ojson::array();
  for (const auto& p : runner.recommender().proposals()) {
    ojson pj;
    pj["proposal"] = p.proposal_id;
    pj["gap"] = {{"kind", sar::to_string(p.gap.kind)},
                 {"subject", p.gap.subject},
                 {"expected", scalar_json(p.gap.expected)},
                 {"actual", scalar_json(p.gap.actual)},
                 {"detected_ts", p.gap.detected_ts.count()}};
    pj["alternatives"] = ojson::array();
    for (const auto& a : p.alternatives) pj["alternatives"].push_back({{"id", a.id}, {"label", a.label}});
    pj["state"] = sar::to_string(p.state);
    pj["chosen"] = p.chosen ? ojson(*p.chosen) : ojson(nullptr);
    pj["chooser"] = p.chooser ? ojson(*p.chooser) : ojson(nullptr);
    pj["issued_ts"] = p.issued_ts.count();
    j.push_back(std::move(pj));
  }
  return json_response(200, j);
}

HttpResponse decision_points(scenario::Runner& runner) {
  ojson j = ojson::array();
  for (const auto& p : runner.board().points()) {
    ojson pj;
    pj["point"] = p.id;
    pj["role"] = p.role;
    pj["prompt"] = p.prompt;
    pj["options"] = ojson::array();
    for (const auto& o : p.options) pj["options"].push_back({{"id", o.id}, {"label", o.label}});
    pj["context"] = p.context;
    pj["issued_ts"] = p.issued_ts.count();
    pj["due_ts"] = p.due_ts.count();
    pj["proposal"] = p.proposal;
    if (p.decided) {
      pj["decided"] = {{"option", p.decided->option},
                       {"chooser", p.decided->chooser},
                       {"ts", p.decided->ts.count()},
                       {"seq", p.choice_seq.value_or(0)}};
    } else {
      pj["decided"] = nullptr;
    }
    j.push_back(std::move(pj));
  }
  return json_response(200, j);
}

HttpResponse clock(scenario::Runner& runner) {
  ojson j;
  j["now"] = runner.now().count();
  j["paused"] = runner.paused();
  j["finished"] = runner.finished();
  j["end_ts"] = runner.script().end_ts.count();
  return json_response(200, j);
}

SimTime parse_time_param(const std::string& text, const char* name) {
  try {
    return SimTime{detail::parse_duration_text(text)};
  } catch (const std::invalid_argument&) {
    throw InvalidPattern(std::string("bad '") + name + "' parameter: " + text);
  }
}

HttpResponse history(scenario::Runner& runner, std::string_view query) {
  SimTime from{0};
  SimTime to{std::numeric_limits<SimTime::rep>::max()};
  Pattern pattern;
  try {
    for (const auto& [key, value] : parse_query(query)) {
      if (key == "from") {
        from = parse_time_param(value, "from");
      } else if (key == "to") {
        to = parse_time_param(value, "to");
      } else if (key == "etype") {
        if (!pattern.etypes) pattern.etypes.emplace();
        std::size_t start = 0;
        while (start <= value.size()) {
          auto comma = value.find(',', start);
          if (comma == std::string::npos) comma = value.size();
          if (comma > start) pattern.etypes->insert(value.substr(start, comma - start));
          start = comma + 1;
        }
      } else if (key == "source") {
        if (!pattern.sources) pattern.sources.emplace();
        pattern.sources->insert(value);
      } else if (key == "where") {
        pattern.predicates.push_back(parse_predicate(value));
      } else {
        return error_response(400, "InvalidPattern", "unknown history parameter '" + key + "'");
      }
    }
    std::string body;
    for (const auto& e : runner.broker().query_history(from, to, pattern)) {
      body += encode_event(e);
      body += '\n';
    }
    return {200, "application/x-ndjson", std::move(body)};
  } catch (const InvalidRange& ex) {
    return error_response(400, "InvalidRange", ex.what());
  } catch (const InvalidPattern& ex) {
    return error_response(400, "InvalidPattern", ex.what());
  }
}

HttpResponse post_choice(scenario::Runner& runner, std::string_view body) {
  scenario::Choice c;
  try {
    const auto j = nlohmann::json::parse(body);
    c.point = j.at("point").get<std::string>();
    c.option = j.at("option").get<std::string>();
    c.chooser = j.contains("chooser") ? j["chooser"].get<std::string>() : std::string("console");
  } catch (const nlohmann::json::exception& ex) {
    return error_response(400, "BadRequest", std::string("expected {\"point\", \"option\", \"chooser\"}: ") + ex.what());
  }
  try {
    auto fut = runner.board().submit(c);
    if (fut.wait_for(kChoiceAckTimeout) != std::future_status::ready) {
      return error_response(504, "Timeout", "choice queued but not yet applied by the scenario driver");
    }
    const auto seq = fut.get();
    ojson j;
    j["ack"] = seq;
    j["point"] = c.point;
    j["option"] = c.option;
    return json_response(200, j);
  } catch (const UnknownPoint& ex) {
    return error_response(404, ex.code(), ex.what());
  } catch (const AlreadyDecided& ex) {
    return error_response(409, ex.code(), ex.what());
  } catch (const AbortedByOperator& ex) {
    return error_response(503, ex.code(), ex.what());
  }
}

}  // namespace

std::uint16_t port_from_env(std::uint16_t fallback) {
  const char* raw = std::getenv(kPortEnv);
  if (raw == nullptr || *raw == '\0') return fallback;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (*end != '\0' || v < 0 || v > 65535) {
    throw std::invalid_argument(std::string(kPortEnv) + " is not a port number: " + raw);
  }
  return static_cast<std::uint16_t>(v);
}

std::string url_decode(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size() && hex(s[i + 1]) >= 0 && hex(s[i + 2]) >= 0) {
      out += static_cast<char>(hex(s[i + 1]) * 16 + hex(s[i + 2]));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_query(std::string_view query) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t start = 0;
  while (start < query.size()) {
    auto amp = query.find('&', start);
    if (amp == std::string_view::npos) amp = query.size();
    const auto part = query.substr(start, amp - start);
    if (!part.empty()) {
      const auto eq = part.find('=');
      if (eq == std::string_view::npos) {
        out.emplace_back(url_decode(part), std::string{});
      } else {
        out.emplace_back(url_decode(part.substr(0, eq)), url_decode(part.substr(eq + 1)));
      }
    }
    start = amp + 1;
  }
  return out;
}

HttpResponse handle_request(scenario::Runner& runner, std::string_view method, std::string_view target,
                            std::string_view body) {
  const auto qmark = target.find('?');
  const auto path = target.substr(0, qmark);
  const auto query = qmark == std::string_view::npos ? std::string_view{} : target.substr(qmark + 1);

  try {
    if (method == "GET") {
      if (path == "/state/processes") return processes(runner);
      if (path == "/state/inventory") return inventory(runner);
      if (path == "/proposals") return proposals(runner);
      if (path == "/decision-points") return decision_points(runner);
      if (path == "/history") return history(runner, query);
      if (path == "/metrics") {
        return {200, "application/json",
                scenario::metrics_json(scenario::metrics(runner.broker().log(), runner.script()))};
      }
      if (path == "/clock") return clock(runner);
    } else if (method == "POST") {
      if (path == "/choices") return post_choice(runner, body);
    } else if (method == "OPTIONS") {
      return {204, "text/plain", {}};
    }
    return error_response(404, "NotFound", "no route for " + std::string(method) + " " + std::string(path));
  } catch (const Error& ex) {
    return error_response(500, ex.code(), ex.what());
  }
}

}  // namespace emcloud::gateway
