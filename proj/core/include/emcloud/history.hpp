#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "emcloud/event.hpp"
#include "emcloud/pattern.hpp"

namespace emcloud {

/// Read side of the event history. query_history returns the events with
/// ts in [from, to) matching `pattern`, sorted by (ts, source, seq).
class HistorySource {
 public:
  virtual ~HistorySource() = default;
  virtual std::vector<Event> query_history(SimTime from, SimTime to,
                                           const Pattern& pattern) const = 0;
};

/// Deterministic shard for an event: FNV-1a of the event type, mod n_shards.
std::size_t shard_of(std::string_view etype, std::size_t n_shards);
inline std::size_t shard_of(const Event& e, std::size_t n_shards) {
  return shard_of(e.etype, n_shards);
}

/// Append-only, time-indexed event store partitioned by event type.
/// Not synchronized; the broker guards it.
class HistoryStore final : public HistorySource {
 public:
  explicit HistoryStore(std::size_t n_shards = 1);

  /// Stores a sequenced event. Throws InvalidEvent when seq is unset or
  /// already present.
  void append(Event e);

  std::vector<Event> query_history(SimTime from, SimTime to,
                                   const Pattern& pattern) const override;

  /// Every stored event, in seq order.
  std::vector<Event> all() const;

  std::size_t size() const noexcept { return size_; }
  std::size_t n_shards() const noexcept { return shards_.size(); }
  std::size_t shard_size(std::size_t shard) const { return shards_.at(shard).size(); }

 private:
  using Key = std::tuple<std::int64_t, std::string, std::uint64_t>;  // (ts, source, seq)

  std::vector<std::map<Key, Event>> shards_;
  std::map<std::uint64_t, std::pair<std::size_t, Key>> by_seq_;
  std::size_t size_ = 0;
};

}  // namespace emcloud
