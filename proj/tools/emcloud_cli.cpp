#include <atomic>
#include <csignal>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "emcloud/errors.hpp"
#include "emcloud/gateway/server.hpp"
#include "emcloud/pattern.hpp"
#include "emcloud/run_log.hpp"
#include "emcloud/scenario/metrics.hpp"
#include "emcloud/scenario/runner.hpp"
#include "emcloud/scenario/script.hpp"
#include "emcloud/time.hpp"

namespace sc = emcloud::scenario;
namespace gw = emcloud::gateway;

namespace {

std::atomic<sc::Runner*> g_runner{nullptr};
std::atomic<bool> g_stop{false};

void on_signal(int) {
  g_stop = true;
  if (auto* r = g_runner.load()) r->abort();
}

// exit codes: 0 ok, 1 operation error, 2 milestone/rate check failed
constexpr int kCheckFailed = 2;

struct RunArgs {
  std::string scenario = "nuclear";
  std::string decisions = "scripted";
  std::string speed = "max";
  std::optional<std::uint64_t> seed;
  std::string log_path;
  std::string metrics_path;
  std::optional<std::uint16_t> port;
  bool quiet = false;
};

int report(const sc::RunMetrics& m, bool quiet) {
  if (!quiet) std::cout << sc::milestone_table(m);
  return m.all_pass() ? 0 : kCheckFailed;
}

void write_outputs(const RunArgs& a, const sc::RunLog& log, const sc::RunMetrics& m) {
  if (!a.log_path.empty()) emcloud::write_run_log(a.log_path, log.events);
  if (!a.metrics_path.empty()) {
    std::ofstream out(a.metrics_path);
    if (!out) throw emcloud::Error("IoError", "cannot write " + a.metrics_path);
    out << sc::metrics_json(m) << '\n';
  }
}

int cmd_run(const RunArgs& a) {
  auto script = sc::load_scenario_file(sc::resolve_scenario(a.scenario));
  if (a.seed) script.seed = *a.seed;
  const bool interactive = a.decisions == "interactive";

  sc::ScriptedDecisions scripted;
  sc::ExternalDecisions external;
  sc::DecisionSource& source = interactive ? static_cast<sc::DecisionSource&>(external) : scripted;

  sc::RunOptions opts;
  opts.speed = sc::parse_speed(a.speed);
  sc::Runner runner(script, source, opts);
  g_runner = &runner;

  std::optional<gw::Server> server;
  if (interactive) {
    gw::ServerOptions so;
    so.port = a.port ? *a.port : gw::port_from_env();
    server.emplace(runner, so);
    server->start();
    std::cerr << "gateway listening on 127.0.0.1:" << server->port() << '\n';
  }

  sc::RunLog log;
  try {
    log = runner.run();
  } catch (...) {
    g_runner = nullptr;
    throw;
  }
  g_runner = nullptr;
  if (server) server->stop();

  auto m = sc::metrics(log.events, script);
  write_outputs(a, log, m);
  return report(m, a.quiet);
}

int cmd_serve(const RunArgs& a) {
  auto script = sc::load_scenario_file(sc::resolve_scenario(a.scenario));
  if (a.seed) script.seed = *a.seed;
  sc::ExternalDecisions external;
  sc::RunOptions opts;
  opts.speed = sc::parse_speed(a.speed);
  sc::Runner runner(script, external, opts);
  g_runner = &runner;

  gw::ServerOptions so;
  so.port = a.port ? *a.port : gw::port_from_env();
  gw::Server server(runner, so);
  server.start();
  std::cerr << "gateway listening on 127.0.0.1:" << server.port() << '\n';

  int rc = 0;
  std::thread worker([&] {
    try {
      auto log = runner.run();
      auto m = sc::metrics(log.events, script);
      write_outputs(a, log, m);
      rc = report(m, a.quiet);
      std::cerr << "run finished at " << emcloud::format_sim_time(log.end_ts) << "; still serving (Ctrl-C to stop)\n";
    } catch (const emcloud::AbortedByOperator&) {
      rc = 1;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      rc = 1;
    }
  });

  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  runner.abort();
  worker.join();
  g_runner = nullptr;
  server.stop();
  return rc;
}

struct QueryArgs {
  std::string log_path;
  std::string from = "0";
  std::string to;
  std::vector<std::string> etypes;
  std::vector<std::string> sources;
  std::vector<std::string> where;
};

int cmd_query(const QueryArgs& q) {
  auto events = emcloud::read_run_log(q.log_path);
  auto store = emcloud::replay_into_store(events);

  emcloud::Pattern p;
  if (!q.etypes.empty()) p.etypes.emplace(q.etypes.begin(), q.etypes.end());
  if (!q.sources.empty()) p.sources.emplace(q.sources.begin(), q.sources.end());
  for (const auto& w : q.where) p.predicates.push_back(emcloud::parse_predicate(w));

  const auto from = emcloud::SimTime{emcloud::parse_duration(q.from).count()};
  const auto to = q.to.empty() ? emcloud::SimTime{std::numeric_limits<std::int64_t>::max()}
                               : emcloud::SimTime{emcloud::parse_duration(q.to).count()};
  for (const auto& e : store.query_history(from, to, p)) std::cout << emcloud::encode_event(e) << '\n';
  return 0;
}

int cmd_verify(const std::string& log_path, const std::string& scenario, bool quiet) {
  auto script = sc::load_scenario_file(sc::resolve_scenario(scenario));
  auto events = emcloud::read_run_log(log_path);
  auto m = sc::metrics(events, script);
  int rc = report(m, quiet);
  return rc == 0 ? 0 : 1;
}

void add_run_flags(CLI::App* c, RunArgs& a) {
  c->add_option("-s,--scenario", a.scenario, "scenario name or path")->capture_default_str();
  c->add_option("--speed", a.speed, "max or sim-seconds per wall second")->capture_default_str();
  c->add_option("--seed", a.seed, "override the scenario seed");
  c->add_option("--log", a.log_path, "write the run log (canonical lines)");
  c->add_option("--metrics", a.metrics_path, "write metrics JSON");
  c->add_option("-p,--port", a.port, "gateway port (default $EMCLOUD_PORT or 8080)");
  c->add_flag("-q,--quiet", a.quiet, "no milestone table");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emcloud: crisis event cloud, CEP and process orchestration"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "execute a scenario and print the milestone table");
  add_run_flags(run, run_args);
  run->add_option("-d,--decisions", run_args.decisions, "scripted or interactive")
      ->check(CLI::IsMember({"scripted", "interactive"}))
      ->capture_default_str();

  RunArgs serve_args;
  serve_args.speed = "60";
  auto* serve = app.add_subcommand("serve", "run a scenario interactively behind the gateway");
  add_run_flags(serve, serve_args);

  QueryArgs qa;
  auto* query = app.add_subcommand("query", "history query over a saved run log");
  query->add_option("-l,--log", qa.log_path, "run log")->required();
  query->add_option("--from", qa.from, "inclusive start (ms or duration)");
  query->add_option("--to", qa.to, "exclusive end (ms or duration)");
  query->add_option("-e,--etype", qa.etypes, "event type (repeatable)");
  query->add_option("--source", qa.sources, "event source (repeatable)");
  query->add_option("-w,--where", qa.where, "attribute predicate, e.g. 'value>2.0' (repeatable)");

  std::string verify_log, verify_scenario = "nuclear";
  bool verify_quiet = false;
  auto* verify = app.add_subcommand("verify", "check a run log against the scenario milestones");
  verify->add_option("-l,--log", verify_log, "run log")->required();
  verify->add_option("-s,--scenario", verify_scenario, "scenario name or path")->capture_default_str();
  verify->add_flag("-q,--quiet", verify_quiet);

  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  try {
    if (*run) return cmd_run(run_args);
    if (*serve) return cmd_serve(serve_args);
    if (*query) return cmd_query(qa);
    if (*verify) return cmd_verify(verify_log, verify_scenario, verify_quiet);
  } catch (const emcloud::Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
