#pragma once

#include <atomic>
#include <chrono>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "emcloud/broker.hpp"
#include "emcloud/cep/engine.hpp"
#include "emcloud/flow/orchestrator.hpp"
#include "emcloud/sar/recommender.hpp"
#include "emcloud/scenario/decisions.hpp"
#include "emcloud/scenario/script.hpp"
#include "emcloud/scenario/sensors.hpp"

namespace emcloud::scenario {

struct Speed {
  enum class Mode { Max, RealTime };
  Mode mode = Mode::Max;
  double factor = 1.0;  // sim seconds per wall second in RealTime mode

  static Speed max() { return {}; }
  static Speed real_time(double factor) { return {Mode::RealTime, factor}; }
};

/// "max" or a positive scale factor such as "60". Throws std::invalid_argument.
Speed parse_speed(std::string_view text);

struct Pause {
  SimTime at{0};
  std::string point;
  std::chrono::steady_clock::duration wall{0};
};

struct RunLog {
  std::vector<Event> events;  // seq order
  SimTime end_ts{0};
  std::vector<Choice> choices;
  std::vector<Pause> pauses;
};

struct RunOptions {
  Speed speed;
  std::optional<std::uint64_t> seed;  // overrides the script seed
  std::ostream* log_out = nullptr;    // canonical lines, written as published
};

/// Discrete-time scenario driver and owner of the engine components.
///
/// Each tick runs: injections and due deliveries, sensor emissions, then
/// rounds of dcep -> (first round: dcep/sar ticks) -> orchestrator ->
/// decision points until no new events appear, then one broker flush.
/// Accessors may be used from other threads while run() executes; the
/// components they return are internally synchronized.
class Runner {
 public:
  Runner(ScenarioScript script, DecisionSource& source, RunOptions options = {});
  ~Runner();

  Runner(const Runner&) = delete;
  Runner& operator=(const Runner&) = delete;

  /// Runs to end_ts. Throws MissingScriptedChoice, AbortedByOperator.
  RunLog run();

  /// Stops the run at the next tick or decision wait.
  void abort();

  SimTime now() const { return SimTime{now_ms_.load()}; }
  bool finished() const { return finished_.load(); }
  bool paused() const { return paused_.load(); }

  const ScenarioScript& script() const { return script_; }
  Broker& broker() { return broker_; }
  flow::Orchestrator& orchestrator() { return orchestrator_; }
  sar::Recommender& recommender() { return recommender_; }
  DecisionBoard& board() { return board_; }
  const cep::Engine& dcep() const { return dcep_; }
  const SensorGroup* group(std::string_view id) const;

 private:
  void step(SimTime now);
  std::vector<Event> round(std::vector<Event> fresh, bool first, SimTime now);
  void issue_points(const std::vector<Event>& events, SimTime now);
  void issue(DecisionPoint p, SimTime now);
  void apply_due_choices(SimTime now);
  void apply_choice(const DecisionPoint& p, const Choice& c, SimTime now);
  void activate(std::string_view group, std::size_t count, SimTime now, bool emit_now);
  void publish(Event e);
  void collect_outboxes();
  SensorGroup& group_mut(std::string_view id);

  ScenarioScript script_;
  DecisionSource& source_;
  RunOptions options_;

  IdGenerator ids_;
  Broker broker_;
  cep::Engine dcep_;
  flow::Orchestrator orchestrator_;
  sar::Recommender recommender_;
  DecisionBoard board_;
  std::vector<SensorGroup> groups_;

  std::vector<Event> staged_;  // published this round, not yet routed
  std::set<std::string, std::less<>> fired_points_;
  std::set<std::string, std::less<>> issued_ids_;
  std::vector<DecisionPoint> pending_points_;
  std::vector<Choice> choices_;
  std::vector<Pause> pauses_;

  std::atomic<std::int64_t> now_ms_{0};
  std::atomic<bool> finished_{false};
  std::atomic<bool> paused_{false};
  std::atomic<bool> aborted_{false};
  bool started_ = false;
};

/// Convenience wrapper: Runner(script, source, {speed}).run().
RunLog run(const ScenarioScript& script, DecisionSource& source, Speed speed = Speed::max());

}  // namespace emcloud::scenario
