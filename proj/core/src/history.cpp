#include "emcloud/history.hpp"

#include <algorithm>
#include <limits>

#include "emcloud/errors.hpp"

namespace emcloud {

std::size_t shard_of(std::string_view etype, std::size_t n_shards) {
  if (n_shards <= 1) return 0;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : etype) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h % n_shards);
}

HistoryStore::HistoryStore(std::size_t n_shards) : shards_(std::max<std::size_t>(1, n_shards)) {}

void HistoryStore::append(Event e) {
  if (!e.seq) throw InvalidEvent("history append requires a sequenced event");
  const std::uint64_t seq = *e.seq;
  if (by_seq_.contains(seq)) throw InvalidEvent("duplicate seq " + std::to_string(seq));
  const std::size_t shard = shard_of(e, shards_.size());
  Key key{e.ts.count(), e.source, seq};
  by_seq_.emplace(seq, std::make_pair(shard, key));
  shards_[shard].emplace(std::move(key), std::move(e));
  ++size_;
}

std::vector<Event> HistoryStore::query_history(SimTime from, SimTime to,
                                               const Pattern& pattern) const {
  if (from > to) throw InvalidRange("query range start is after its end");
  std::vector<Event> out;
  if (from == to) return out;

  std::vector<bool> wanted(shards_.size(), !pattern.etypes.has_value());
  if (pattern.etypes) {
    for (const auto& t : *pattern.etypes) wanted[shard_of(t, shards_.size())] = true;
  }
  const Key lo{from.count(), std::string{}, 0};
  const Key hi{to.count(), std::string{}, 0};
  for (std::size_t s = 0; s < shards_.size(); ++s) {
    if (!wanted[s]) continue;
    const auto& shard = shards_[s];
    for (auto it = shard.lower_bound(lo), end = shard.lower_bound(hi); it != end; ++it) {
      if (match(pattern, it->second)) out.push_back(it->second);
    }
  }
  if (shards_.size() > 1) {
    std::sort(out.begin(), out.end(), [](const Event& a, const Event& b) {
      return std::tie(a.ts, a.source, *a.seq) < std::tie(b.ts, b.source, *b.seq);
    });
  }
  return out;
}

std::vector<Event> HistoryStore::all() const {
  std::vector<Event> out;
  out.reserve(size_);
  for (const auto& [seq, where] : by_seq_) out.push_back(shards_[where.first].at(where.second));
  return out;
}

}  // namespace emcloud
