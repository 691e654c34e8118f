#include "emcloud/flow/orchestrator.hpp"

#include <stdexcept>

#include "emcloud/errors.hpp"

namespace emcloud::flow {

namespace {

constexpr std::string_view kOrchestratorSource = "orchestrator";
constexpr std::string_view kInventorySource = "inventory";

std::int64_t ms(SimTime t) { return static_cast<std::int64_t>(t.count()); }

}  // namespace

const ActivityState* InstanceState::activity(std::string_view id) const {
  for (const auto& a : activities) {
    if (a.activity_id == id) return &a;
  }
  return nullptr;
}

const InstanceState* OrchestratorSnapshot::instance(std::string_view id) const {
  for (const auto& i : instances) {
    if (i.instance_id == id) return &i;
  }
  return nullptr;
}

const Reservation* OrchestratorSnapshot::reservation(std::string_view id) const {
  for (const auto& r : reservations) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

Orchestrator::Orchestrator(Broker& broker, IdGenerator& ids) : broker_(broker), ids_(ids) {}

std::string Orchestrator::load_process(ProcessDefinition def) {
  if (auto v = def.violations(); !v.empty()) throw MalformedProcess(std::move(v));
  Lock lock(mu_);
  std::string id = def.process_id;
  if (!processes_.contains(id)) process_order_.push_back(id);
  processes_.insert_or_assign(id, std::move(def));
  return id;
}

const ProcessDefinition& Orchestrator::process(std::string_view process_id) const {
  std::shared_lock lock(mu_);
  auto it = processes_.find(process_id);
  if (it == processes_.end()) throw UnknownProcess("unknown process '" + std::string(process_id) + "'");
  return it->second;
}

std::vector<std::string> Orchestrator::process_ids() const {
  std::shared_lock lock(mu_);
  return process_order_;
}

Event Orchestrator::make(std::string_view etype, std::string source, SimTime now, Attributes attrs) {
  return make_event(std::string(etype), std::move(source), now, std::move(attrs), std::nullopt, ids_);
}

Event Orchestrator::status_event(const Instance& inst, const ActivityState& a,
                                 ActivityStatus previous, SimTime now) {
  Attributes attrs{
      {"instance", inst.state.instance_id},
      {"process", inst.state.process_id},
      {"activity", a.activity_id},
      {"lane", a.lane},
      {"status", std::string(to_string(a.status))},
      {"previous", std::string(to_string(previous))},
  };
  if (a.intended_finish_ts) attrs.emplace("intended_finish_ts", ms(*a.intended_finish_ts));
  return make(etypes::kActivityStatusChange, std::string(kOrchestratorSource), now, std::move(attrs));
}

std::vector<Event> Orchestrator::publish_all(std::vector<Event> events) {
  std::vector<Event> out;
  out.reserve(events.size());
  for (auto& e : events) out.push_back(broker_.post(std::move(e)));
  std::lock_guard lock(outbox_mu_);
  outbox_.insert(outbox_.end(), out.begin(), out.end());
  return out;
}

std::vector<Event> Orchestrator::take_published() {
  std::lock_guard lock(outbox_mu_);
  std::vector<Event> out;
  out.swap(outbox_);
  return out;
}

void Orchestrator::set_status_locked(Instance& inst, ActivityState& a, ActivityStatus status,
                                     SimTime now, std::vector<Event>& out) {
  const ActivityStatus prev = a.status;
  const bool legal = (prev == ActivityStatus::Waiting && status == ActivityStatus::Ongoing) ||
                     (prev == ActivityStatus::Ongoing && status == ActivityStatus::Finished);
  if (!legal) {
    throw IllegalTransition("activity '" + a.activity_id + "' of " + inst.state.instance_id +
                            ": " + std::string(to_string(prev)) + " -> " +
                            std::string(to_string(status)));
  }
  a.status = status;
  if (status == ActivityStatus::Ongoing) {
    a.started_ts = now;
    if (a.planned_duration) a.intended_finish_ts = now + *a.planned_duration;
  } else {
    a.finished_ts = now;
  }
  out.push_back(status_event(inst, a, prev, now));
}

std::string Orchestrator::start_instance_locked(const ProcessDefinition& def, SimTime now,
                                                std::vector<Event>& out) {
  const std::size_t n = ++instance_counter_[def.process_id];
  Instance inst;
  inst.def = &def;
  inst.state.instance_id = def.process_id + "#" + std::to_string(n);
  inst.state.process_id = def.process_id;
  inst.state.started_ts = now;
  for (const auto& ad : def.activities) {
    ActivityState a;
    a.activity_id = ad.id;
    a.lane = ad.lane;
    a.planned_duration = ad.planned_duration;
    inst.state.activities.push_back(std::move(a));
  }
  instances_.push_back(std::move(inst));
  instance_index_.emplace(instances_.back().state.instance_id, instances_.size() - 1);
  Instance& stored = instances_.back();
  for (std::size_t i = 0; i < def.activities.size(); ++i) {
    if (!def.activities[i].start) continue;
    auto& a = stored.state.activities[i];
    set_status_locked(stored, a, ActivityStatus::Ongoing, now, out);
    if (def.activities[i].instant) set_status_locked(stored, a, ActivityStatus::Finished, now, out);
  }
  return stored.state.instance_id;
}

std::string Orchestrator::start_instance(std::string_view process_id, SimTime now) {
  std::vector<Event> pending;
  std::string id;
  {
    Lock lock(mu_);
    auto it = processes_.find(process_id);
    if (it == processes_.end()) throw UnknownProcess("unknown process '" + std::string(process_id) + "'");
    id = start_instance_locked(it->second, now, pending);
  }
  publish_all(std::move(pending));
  return id;
}

Orchestrator::Instance& Orchestrator::instance_locked(std::string_view id) {
  auto it = instance_index_.find(id);
  if (it == instance_index_.end()) throw UnknownInstance("unknown instance '" + std::string(id) + "'");
  return instances_[it->second];
}

void Orchestrator::advance_locked(Instance& inst, const Event& trigger, SimTime now,
                                  std::vector<Event>& out) {
  if (inst.def == nullptr) return;
  const auto& def = *inst.def;
  auto index_of = [&](const std::string& id) -> std::size_t {
    for (std::size_t i = 0; i < inst.state.activities.size(); ++i) {
      if (inst.state.activities[i].activity_id == id) return i;
    }
    return inst.state.activities.size();
  };

  std::vector<const TransitionDef*> enabled;
  for (const auto& t : def.transitions) {
    const auto from = index_of(t.from);
    const auto to = index_of(t.to);
    if (from >= inst.state.activities.size() || to >= inst.state.activities.size()) continue;
    if (inst.state.activities[from].status != ActivityStatus::Ongoing) continue;
    if (inst.state.activities[to].status != ActivityStatus::Waiting) continue;
    if (!match(t.trigger, trigger)) continue;
    enabled.push_back(&t);
  }

  for (const auto* t : enabled) {
    auto& from = inst.state.activities[index_of(t->from)];
    auto& to = inst.state.activities[index_of(t->to)];
    if (t->finish_source && from.status == ActivityStatus::Ongoing) {
      set_status_locked(inst, from, ActivityStatus::Finished, now, out);
    }
    if (to.status != ActivityStatus::Waiting) continue;
    set_status_locked(inst, to, ActivityStatus::Ongoing, now, out);
    for (const auto& tmpl : t->emits) {
      std::string source = tmpl.source ? *tmpl.source
                                       : (to.lane.empty() ? std::string(kOrchestratorSource) : to.lane);
      out.push_back(make(tmpl.etype, std::move(source), now, tmpl.attrs));
    }
    const auto* ad = def.activity(to.activity_id);
    if (ad != nullptr && ad->instant) set_status_locked(inst, to, ActivityStatus::Finished, now, out);
  }
}

std::vector<Event> Orchestrator::advance(std::string_view instance_id, const Event& trigger, SimTime now) {
  std::vector<Event> pending;
  {
    Lock lock(mu_);
    advance_locked(instance_locked(instance_id), trigger, now, pending);
  }
  return publish_all(std::move(pending));
}

std::vector<Event> Orchestrator::dispatch(const std::vector<Event>& events, SimTime now) {
  std::vector<Event> pending;
  {
    Lock lock(mu_);
    for (const auto& e : events) {
      const std::size_t existing = instances_.size();
      for (std::size_t i = 0; i < existing; ++i) advance_locked(instances_[i], e, now, pending);
      for (const auto& pid : process_order_) {
        const auto& def = processes_.at(pid);
        if (!def.start.on || !match(*def.start.on, e)) continue;
        if (!def.start.repeat && triggered_started_[pid]) continue;
        triggered_started_[pid] = true;
        start_instance_locked(def, now, pending);
      }
    }
  }
  return publish_all(std::move(pending));
}

std::vector<Event> Orchestrator::start_epoch_processes(SimTime now) {
  std::vector<Event> pending;
  {
    Lock lock(mu_);
    for (const auto& pid : process_order_) {
      const auto& def = processes_.at(pid);
      if (def.start.at_epoch) start_instance_locked(def, now, pending);
    }
  }
  return publish_all(std::move(pending));
}

Event Orchestrator::set_activity_status(std::string_view instance_id, std::string_view activity_id,
                                        ActivityStatus status, SimTime now) {
  std::vector<Event> pending;
  {
    Lock lock(mu_);
    auto& inst = instance_locked(instance_id);
    ActivityState* target = nullptr;
    for (auto& a : inst.state.activities) {
      if (a.activity_id == activity_id) target = &a;
    }
    if (target == nullptr) {
      throw UnknownActivity("unknown activity '" + std::string(activity_id) + "' in " +
                            std::string(instance_id));
    }
    set_status_locked(inst, *target, status, now, pending);
  }
  return publish_all(std::move(pending)).front();
}

std::string Orchestrator::start_adhoc_activity(std::string_view activity_id, std::string_view lane,
                                               std::optional<Duration> planned, SimTime now) {
  std::vector<Event> pending;
  std::string id;
  {
    Lock lock(mu_);
    const std::size_t n = ++instance_counter_["adhoc"];
    Instance inst;
    inst.state.instance_id = "adhoc#" + std::to_string(n);
    inst.state.process_id = "adhoc";
    inst.state.started_ts = now;
    ActivityState a;
    a.activity_id = std::string(activity_id);
    a.lane = std::string(lane);
    a.planned_duration = planned;
    inst.state.activities.push_back(std::move(a));
    instances_.push_back(std::move(inst));
    id = instances_.back().state.instance_id;
    instance_index_.emplace(id, instances_.size() - 1);
    auto& stored = instances_.back();
    set_status_locked(stored, stored.state.activities.front(), ActivityStatus::Ongoing, now, pending);
  }
  publish_all(std::move(pending));
  return id;
}

void Orchestrator::set_inventory(std::string_view kind, std::int64_t total) {
  Lock lock(mu_);
  auto& entry = inventory_[std::string(kind)];
  if (total < entry.committed) {
    throw std::invalid_argument("inventory total below committed quantity for '" + std::string(kind) + "'");
  }
  entry.total = total;
  entry.available = total - entry.committed;
}

Reservation Orchestrator::request_resources(std::string_view kind, std::int64_t quantity,
                                            std::string_view holder, SimTime now) {
  if (quantity < 1) throw std::invalid_argument("resource request quantity must be at least 1");
  std::vector<Event> pending;
  Reservation r;
  {
    Lock lock(mu_);
    auto it = inventory_.find(kind);
    const std::int64_t available = it == inventory_.end() ? 0 : it->second.available;
    pending.push_back(make(etypes::kResourceRequest, std::string(holder), now,
                           {{"kind", std::string(kind)}, {"quantity", quantity}, {"holder", std::string(holder)}}));
    if (available < quantity) {
      throw InsufficientResources(std::string(kind), quantity, available);
    }
    it->second.available -= quantity;
    it->second.committed += quantity;
    r.id = "res-" + std::to_string(next_reservation_++);
    r.kind = std::string(kind);
    r.requested = quantity;
    r.committed = quantity;
    r.holder = std::string(holder);
    r.confirmed_for_ts = now + lead_time_;
    reservations_.push_back(r);
    pending.push_back(make(etypes::kReservationConfirmed, std::string(kInventorySource), now,
                           {{"reservation", r.id},
                            {"kind", r.kind},
                            {"quantity", quantity},
                            {"holder", r.holder},
                            {"confirmed_for_ts", ms(r.confirmed_for_ts)},
                            {"available", it->second.available},
                            {"committed", it->second.committed}}));
  }
  publish_all(std::move(pending));
  return r;
}

Reservation& Orchestrator::reservation_locked(std::string_view id) {
  for (auto& r : reservations_) {
    if (r.id == id && r.active) return r;
  }
  throw UnknownReservation("unknown or closed reservation '" + std::string(id) + "'");
}

Event Orchestrator::report_field_loss(std::string_view reservation_id, std::int64_t quantity_lost,
                                      SimTime now) {
  std::vector<Event> pending;
  {
    Lock lock(mu_);
    auto& r = reservation_locked(reservation_id);
    if (quantity_lost < 0 || quantity_lost > r.committed) {
      throw InvalidLoss("cannot lose " + std::to_string(quantity_lost) + " of " +
                        std::to_string(r.committed) + " committed on " + r.id);
    }
    auto& inv = inventory_[r.kind];
    r.committed -= quantity_lost;
    inv.committed -= quantity_lost;
    inv.total -= quantity_lost;
    pending.push_back(make(etypes::kFieldAlert, r.holder, now,
                           {{"reservation", r.id},
                            {"kind", r.kind},
                            {"quantity_lost", quantity_lost},
                            {"committed", r.committed},
                            {"total", inv.total}}));
  }
  return publish_all(std::move(pending)).front();
}

Event Orchestrator::release_resources(std::string_view reservation_id, SimTime now) {
  std::vector<Event> pending;
  {
    Lock lock(mu_);
    auto& r = reservation_locked(reservation_id);
    auto& inv = inventory_[r.kind];
    const std::int64_t released = r.committed;
    inv.available += released;
    inv.committed -= released;
    r.committed = 0;
    r.active = false;
    pending.push_back(make(etypes::kInventoryUpdate, std::string(kInventorySource), now,
                           {{"action", std::string("release")},
                            {"reservation", r.id},
                            {"kind", r.kind},
                            {"released", released},
                            {"total", inv.total},
                            {"available", inv.available},
                            {"committed", inv.committed}}));
  }
  return publish_all(std::move(pending)).front();
}

std::vector<Event> Orchestrator::deliver_due(SimTime now) {
  std::vector<Event> pending;
  {
    Lock lock(mu_);
    for (auto& r : reservations_) {
      if (!r.active || r.delivered || r.confirmed_for_ts > now) continue;
      r.delivered = true;
      pending.push_back(make(etypes::kResourcesDelivered, std::string(kInventorySource), now,
                             {{"reservation", r.id},
                              {"kind", r.kind},
                              {"quantity", r.committed},
                              {"holder", r.holder}}));
    }
  }
  return publish_all(std::move(pending));
}

void Orchestrator::set_requested(std::string_view reservation_id, std::int64_t requested) {
  if (requested < 0) throw std::invalid_argument("requested quantity must be non-negative");
  Lock lock(mu_);
  reservation_locked(reservation_id).requested = requested;
}

OrchestratorSnapshot Orchestrator::snapshot(SimTime now) const {
  std::shared_lock lock(mu_);
  OrchestratorSnapshot s;
  s.taken_at = now;
  s.instances.reserve(instances_.size());
  for (const auto& i : instances_) s.instances.push_back(i.state);
  s.inventory = inventory_;
  s.reservations = reservations_;
  return s;
}

}  // namespace emcloud::flow
