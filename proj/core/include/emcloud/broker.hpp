#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <vector>

#include "emcloud/event.hpp"
#include "emcloud/history.hpp"
#include "emcloud/pattern.hpp"

namespace emcloud {

struct SubscriptionId {
  std::uint64_t value = 0;
  auto operator<=>(const SubscriptionId&) const = default;
};

/// Delivery callback. Invoked once per matching event, serialized per
/// subscription. Callbacks may publish or subscribe; such calls are
/// queued behind the delivery in progress.
using SubscriberRef = std::function<void(const Event&)>;

enum class DeliveryMode {
  Immediate,  // every publish delivers before returning
  Batched,    // publishes queue until flush(); each flush delivers in (ts, source, seq) order
};

/// Content-based publish/subscribe broker with an event history.
///
/// publish assigns the next global sequence number, stores the event in
/// its shard and delivers it to every subscription whose pattern matches.
/// A subscription sees only events published after it was created;
/// older events are reachable through query_history.
class Broker final : public HistorySource {
 public:
  explicit Broker(std::size_t n_shards = 1, DeliveryMode mode = DeliveryMode::Immediate);

  Broker(const Broker&) = delete;
  Broker& operator=(const Broker&) = delete;

  /// Returns the assigned seq. Throws InvalidEvent if `e.seq` is already set
  /// or the event is otherwise invalid.
  std::uint64_t publish(Event e);

  /// Same as publish, returning the stored (sequenced) copy.
  Event post(Event e);

  SubscriptionId subscribe(Pattern pattern, SubscriberRef subscriber);
  void unsubscribe(SubscriptionId id);

  /// Delivers every queued event. Returns the number of deliveries made.
  std::size_t flush();

  std::vector<Event> query_history(SimTime from, SimTime to,
                                   const Pattern& pattern) const override;

  /// Every published event in seq order.
  std::vector<Event> log() const;

  std::size_t size() const;
  std::size_t subscription_count() const;
  std::size_t n_shards() const { return n_shards_; }
  std::uint64_t delivery_failures() const;

  /// Appends each published event as a canonical line to `out`, in seq order.
  void attach_log(std::ostream& out);

 private:
  struct Subscription {
    Pattern pattern;
    SubscriberRef subscriber;
    std::uint64_t since_seq = 0;
    bool active = true;
  };

  std::size_t deliver_pending_locked();

  const std::size_t n_shards_;
  const DeliveryMode mode_;

  mutable std::recursive_mutex mu_;  // seq assignment, subscriptions, delivery
  std::uint64_t next_seq_ = 1;
  std::uint64_t next_sub_ = 1;
  std::map<std::uint64_t, std::shared_ptr<Subscription>> subs_;
  std::vector<Event> pending_;
  bool delivering_ = false;
  std::uint64_t delivery_failures_ = 0;
  std::ostream* log_out_ = nullptr;

  mutable std::shared_mutex store_mu_;
  HistoryStore store_;
};

/// Unbounded thread-safe event queue, usable as a SubscriberRef target.
class SubscriberQueue {
 public:
  void push(const Event& e);
  /// Blocks up to `timeout`; nullopt on timeout or after close() once drained.
  std::optional<Event> pop(std::chrono::milliseconds timeout);
  std::vector<Event> drain();
  void close();
  bool closed() const;

  SubscriberRef as_subscriber() {
    return [this](const Event& e) { push(e); };
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Event> items_;
  bool closed_ = false;
};

}  // namespace emcloud
