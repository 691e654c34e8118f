#include "emcloud/scenario/decisions.hpp"

#include <algorithm>

#include "emcloud/errors.hpp"

namespace emcloud::scenario {

bool DecisionPoint::has_option(std::string_view option) const {
  return std::any_of(options.begin(), options.end(), [&](const OptionView& o) { return o.id == option; });
}

void DecisionBoard::issue(DecisionPoint p) {
  std::lock_guard lock(mu_);
  points_.push_back(std::move(p));
  cv_.notify_all();
}

std::vector<DecisionPoint> DecisionBoard::points() const {
  std::lock_guard lock(mu_);
  return points_;
}

std::optional<DecisionPoint> DecisionBoard::point(std::string_view id) const {
  std::lock_guard lock(mu_);
  for (const auto& p : points_) {
    if (p.id == id) return p;
  }
  return std::nullopt;
}

std::vector<DecisionPoint> DecisionBoard::open_points() const {
  std::lock_guard lock(mu_);
  std::vector<DecisionPoint> out;
  for (const auto& p : points_) {
    if (!p.decided) out.push_back(p);
  }
  return out;
}

std::future<std::uint64_t> DecisionBoard::submit(Choice c) {
  std::lock_guard lock(mu_);
  if (closed_) throw AbortedByOperator("decision board is closed");
  auto it = std::find_if(points_.begin(), points_.end(), [&](const DecisionPoint& p) { return p.id == c.point; });
  if (it == points_.end()) throw UnknownPoint("unknown decision point '" + c.point + "'");
  if (!it->has_option(c.option)) {
    throw UnknownPoint("decision point '" + c.point + "' has no option '" + c.option + "'");
  }
  if (it->decided || pending_.contains(c.point)) {
    throw AlreadyDecided("decision point '" + c.point + "' is already decided");
  }
  auto& slot = pending_[c.point];
  slot.choice = std::move(c);
  auto fut = slot.promise.get_future();
  cv_.notify_all();
  return fut;
}

Choice DecisionBoard::wait_submitted(std::string_view point) {
  std::unique_lock lock(mu_);
  for (;;) {
    if (closed_) throw AbortedByOperator("run aborted while waiting on '" + std::string(point) + "'");
    auto it = pending_.find(point);
    if (it != pending_.end() && !it->second.taken) {
      it->second.taken = true;
      return it->second.choice;
    }
    cv_.wait(lock);
  }
}

std::optional<Choice> DecisionBoard::take_submitted(std::string_view point) {
  std::lock_guard lock(mu_);
  auto it = pending_.find(point);
  if (it == pending_.end() || it->second.taken) return std::nullopt;
  it->second.taken = true;
  return it->second.choice;
}

void DecisionBoard::record(std::string_view point, const Choice& c, std::uint64_t seq) {
  std::lock_guard lock(mu_);
  for (auto& p : points_) {
    if (p.id == point) {
      p.decided = c;
      p.choice_seq = seq;
    }
  }
  auto it = pending_.find(point);
  if (it != pending_.end()) {
    const bool same = it->second.choice.option == c.option && it->second.choice.chooser == c.chooser;
    if (it->second.taken && same) {
      it->second.promise.set_value(seq);
    } else {
      it->second.promise.set_exception(std::make_exception_ptr(
          AlreadyDecided("decision point '" + std::string(point) + "' was decided by " + c.chooser)));
    }
    pending_.erase(it);
  }
}

void DecisionBoard::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
  for (auto& [id, slot] : pending_) {
    slot.promise.set_exception(std::make_exception_ptr(AbortedByOperator("run aborted")));
  }
  pending_.clear();
  cv_.notify_all();
}

bool DecisionBoard::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

Choice ScriptedDecisions::decide(const DecisionPoint& p, DecisionBoard&, SimTime now) {
  if (!p.scripted_choice) throw MissingScriptedChoice("decision point '" + p.id + "' has no scripted choice");
  return {p.id, *p.scripted_choice, "script", now};
}

Choice ExternalDecisions::decide(const DecisionPoint& p, DecisionBoard& board, SimTime now) {
  Choice c = board.wait_submitted(p.id);
  c.ts = now;
  return c;
}

}  // namespace emcloud::scenario
