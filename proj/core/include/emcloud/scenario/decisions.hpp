#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emcloud/time.hpp"

namespace emcloud::scenario {

struct OptionView {
  std::string id;
  std::string label;
};

struct Choice {
  std::string point;
  std::string option;
  std::string chooser;
  SimTime ts{0};
};

struct DecisionPoint {
  std::string id;       // spec id, or the proposal id for proposal points
  std::string spec_id;  // empty for proposal points issued without a declaration
  std::string role;
  std::string prompt;
  std::vector<OptionView> options;
  std::vector<std::string> context;  // ids of the triggering events
  SimTime issued_ts{0};
  SimTime due_ts{0};
  bool proposal = false;
  std::optional<std::string> scripted_choice;
  std::optional<Choice> decided;
  std::optional<std::uint64_t> choice_seq;

  bool has_option(std::string_view option) const;
};

/// Thread-safe registry of issued decision points and of choices posted
/// by external clients (the gateway) for the driver to collect.
class DecisionBoard {
 public:
  void issue(DecisionPoint p);
  std::vector<DecisionPoint> points() const;
  std::optional<DecisionPoint> point(std::string_view id) const;
  std::vector<DecisionPoint> open_points() const;

  /// Queues an external choice. Throws UnknownPoint for an unknown point or
  /// an unlisted option, AlreadyDecided when the point is decided or already
  /// has a queued choice. The future yields the seq of the recorded
  /// DecisionChoice event, or AlreadyDecided / AbortedByOperator.
  std::future<std::uint64_t> submit(Choice c);

  /// Blocks until a choice for `point` is queued, or throws
  /// AbortedByOperator once close() is called.
  Choice wait_submitted(std::string_view point);
  std::optional<Choice> take_submitted(std::string_view point);

  /// Marks the point decided and resolves any queued submission.
  void record(std::string_view point, const Choice& c, std::uint64_t seq);

  /// Fails all waiting parties with AbortedByOperator.
  void close();
  bool closed() const;

 private:
  struct Pending {
    Choice choice;
    std::promise<std::uint64_t> promise;
    bool taken = false;
  };

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<DecisionPoint> points_;
  std::map<std::string, Pending, std::less<>> pending_;
  bool closed_ = false;
};

/// Resolves due decision points for the driver.
class DecisionSource {
 public:
  virtual ~DecisionSource() = default;
  /// True when the clock must pause while waiting for a human.
  virtual bool interactive() const = 0;
  virtual Choice decide(const DecisionPoint& p, DecisionBoard& board, SimTime now) = 0;
};

/// Applies each point's scripted choice. Throws MissingScriptedChoice.
class ScriptedDecisions final : public DecisionSource {
 public:
  bool interactive() const override { return false; }
  Choice decide(const DecisionPoint& p, DecisionBoard& board, SimTime now) override;
};

/// Waits for a choice posted through the board.
class ExternalDecisions final : public DecisionSource {
 public:
  bool interactive() const override { return true; }
  Choice decide(const DecisionPoint& p, DecisionBoard& board, SimTime now) override;
};

}  // namespace emcloud::scenario
