#include "emcloud/broker.hpp"

#include <algorithm>
#include <ostream>

#include "emcloud/errors.hpp"

namespace emcloud {

Broker::Broker(std::size_t n_shards, DeliveryMode mode)
    : n_shards_(std::max<std::size_t>(1, n_shards)), mode_(mode), store_(n_shards_) {}

std::uint64_t Broker::publish(Event e) { return *post(std::move(e)).seq; }

Event Broker::post(Event e) {
  if (e.seq) throw InvalidEvent("event " + e.id + " already carries seq " + std::to_string(*e.seq));
  validate_event(e);

  std::lock_guard lock(mu_);
  e.seq = next_seq_++;
  {
    std::unique_lock store_lock(store_mu_);
    store_.append(e);
  }
  if (log_out_ != nullptr) *log_out_ << encode_event(e) << '\n';
  pending_.push_back(e);
  if (mode_ == DeliveryMode::Immediate) deliver_pending_locked();
  return e;
}

SubscriptionId Broker::subscribe(Pattern pattern, SubscriberRef subscriber) {
  if (!subscriber) throw InvalidPattern("subscriber callback is empty");
  if (pattern.geo && !(pattern.geo->radius_km >= 0.0)) {
    throw InvalidPattern("geo radius must be >= 0");
  }
  std::lock_guard lock(mu_);
  auto sub = std::make_shared<Subscription>();
  sub->pattern = std::move(pattern);
  sub->subscriber = std::move(subscriber);
  sub->since_seq = next_seq_ - 1;
  const std::uint64_t id = next_sub_++;
  subs_.emplace(id, std::move(sub));
  return SubscriptionId{id};
}

void Broker::unsubscribe(SubscriptionId id) {
  std::lock_guard lock(mu_);
  auto it = subs_.find(id.value);
  if (it == subs_.end()) {
    throw UnknownSubscription("subscription " + std::to_string(id.value) + " is not active");
  }
  it->second->active = false;
  subs_.erase(it);
}

std::size_t Broker::flush() {
  std::lock_guard lock(mu_);
  return deliver_pending_locked();
}

std::size_t Broker::deliver_pending_locked() {
  if (delivering_) return 0;  // re-entrant publish from a callback; the outer loop drains it
  delivering_ = true;
  std::size_t delivered = 0;
  while (!pending_.empty()) {
    std::vector<Event> batch;
    batch.swap(pending_);
    std::stable_sort(batch.begin(), batch.end(), [](const Event& a, const Event& b) {
      return std::tie(a.ts, a.source, *a.seq) < std::tie(b.ts, b.source, *b.seq);
    });
    std::vector<std::shared_ptr<Subscription>> subs;
    subs.reserve(subs_.size());
    for (const auto& [id, sub] : subs_) subs.push_back(sub);

    for (const Event& e : batch) {
      for (const auto& sub : subs) {
        if (!sub->active || *e.seq <= sub->since_seq) continue;
        try {
          if (!match(sub->pattern, e)) continue;
          sub->subscriber(e);
          ++delivered;
        } catch (...) {
          ++delivery_failures_;
        }
      }
    }
  }
  delivering_ = false;
  return delivered;
}

std::vector<Event> Broker::query_history(SimTime from, SimTime to, const Pattern& pattern) const {
  std::shared_lock lock(store_mu_);
  return store_.query_history(from, to, pattern);
}

std::vector<Event> Broker::log() const {
  std::shared_lock lock(store_mu_);
  return store_.all();
}

std::size_t Broker::size() const {
  std::shared_lock lock(store_mu_);
  return store_.size();
}

std::size_t Broker::subscription_count() const {
  std::lock_guard lock(mu_);
  return subs_.size();
}

std::uint64_t Broker::delivery_failures() const {
  std::lock_guard lock(mu_);
  return delivery_failures_;
}

void Broker::attach_log(std::ostream& out) {
  std::lock_guard lock(mu_);
  log_out_ = &out;
}

void SubscriberQueue::push(const Event& e) {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    items_.push_back(e);
  }
  cv_.notify_one();
}

std::optional<Event> SubscriberQueue::pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  if (!cv_.wait_for(lock, timeout, [&] { return !items_.empty() || closed_; })) {
    return std::nullopt;
  }
  if (items_.empty()) return std::nullopt;
  Event e = std::move(items_.front());
  items_.pop_front();
  return e;
}

std::vector<Event> SubscriberQueue::drain() {
  std::lock_guard lock(mu_);
  std::vector<Event> out(std::make_move_iterator(items_.begin()),
                         std::make_move_iterator(items_.end()));
  items_.clear();
  return out;
}

void SubscriberQueue::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool SubscriberQueue::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

}  // namespace emcloud
