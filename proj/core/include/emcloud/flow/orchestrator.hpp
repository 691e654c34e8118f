#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "emcloud/broker.hpp"
#include "emcloud/event.hpp"
#include "emcloud/flow/process.hpp"

namespace emcloud::flow {

struct ActivityState {
  std::string activity_id;
  std::string lane;
  ActivityStatus status = ActivityStatus::Waiting;
  std::optional<Duration> planned_duration;
  std::optional<SimTime> started_ts;
  std::optional<SimTime> intended_finish_ts;
  std::optional<SimTime> finished_ts;
};

struct InstanceState {
  std::string instance_id;
  std::string process_id;
  SimTime started_ts{0};
  std::vector<ActivityState> activities;  // definition order

  const ActivityState* activity(std::string_view id) const;
};

struct InventoryEntry {
  std::int64_t total = 0;
  std::int64_t available = 0;
  std::int64_t committed = 0;

  bool operator==(const InventoryEntry&) const = default;
};

struct Reservation {
  std::string id;
  std::string kind;
  std::int64_t requested = 0;
  std::int64_t committed = 0;
  std::string holder;
  SimTime confirmed_for_ts{0};
  bool active = true;
  bool delivered = false;
};

/// Immutable copy of orchestrator state at one point in time.
struct OrchestratorSnapshot {
  SimTime taken_at{0};
  std::vector<InstanceState> instances;
  std::map<std::string, InventoryEntry, std::less<>> inventory;
  std::vector<Reservation> reservations;  // creation order

  const InstanceState* instance(std::string_view id) const;
  const Reservation* reservation(std::string_view id) const;
};

/// Runs process definitions as event-driven state machines and keeps the
/// resource inventory.
///
/// Mutations come from one logical owner (the scenario driver). snapshot()
/// may be called from any thread. Every event the orchestrator produces is
/// published through the broker and also queued in an outbox that the
/// owner drains with take_published().
class Orchestrator {
 public:
  Orchestrator(Broker& broker, IdGenerator& ids);

  Orchestrator(const Orchestrator&) = delete;
  Orchestrator& operator=(const Orchestrator&) = delete;

  /// Throws MalformedProcess listing every violated constraint.
  std::string load_process(ProcessDefinition def);
  const ProcessDefinition& process(std::string_view process_id) const;
  std::vector<std::string> process_ids() const;

  /// Start activity Ongoing, all others Waiting. Throws UnknownProcess.
  std::string start_instance(std::string_view process_id, SimTime now);

  /// Fires every transition whose `from` is Ongoing, whose `to` is Waiting
  /// and whose trigger matches. Enablement is judged on the statuses
  /// before the trigger. Throws UnknownInstance.
  std::vector<Event> advance(std::string_view instance_id, const Event& trigger, SimTime now);

  /// Advances every instance on each event, then starts instances of
  /// processes whose start rule matches.
  std::vector<Event> dispatch(const std::vector<Event>& events, SimTime now);

  /// Starts every process whose start rule is "t0".
  std::vector<Event> start_epoch_processes(SimTime now);

  /// Throws IllegalTransition unless Waiting->Ongoing or Ongoing->Finished.
  Event set_activity_status(std::string_view instance_id, std::string_view activity_id,
                            ActivityStatus status, SimTime now);

  /// Starts a one-activity instance outside any declared process.
  std::string start_adhoc_activity(std::string_view activity_id, std::string_view lane,
                                   std::optional<Duration> planned, SimTime now);

  void set_inventory(std::string_view kind, std::int64_t total);
  void set_lead_time(Duration lead) { lead_time_ = lead; }
  Duration lead_time() const { return lead_time_; }

  /// Throws std::invalid_argument for quantity < 1 and
  /// InsufficientResources when the kind cannot cover the request.
  Reservation request_resources(std::string_view kind, std::int64_t quantity,
                                std::string_view holder, SimTime now);

  /// Lost units leave the fleet. Throws InvalidLoss or UnknownReservation.
  Event report_field_loss(std::string_view reservation_id, std::int64_t quantity_lost, SimTime now);

  /// Throws UnknownReservation for unknown or already released ids.
  Event release_resources(std::string_view reservation_id, SimTime now);

  /// Publishes ResourcesDelivered for confirmed reservations that are due.
  std::vector<Event> deliver_due(SimTime now);

  /// Lowers (or raises) the planned quantity of an active reservation.
  void set_requested(std::string_view reservation_id, std::int64_t requested);

  OrchestratorSnapshot snapshot(SimTime now) const;

  /// Events published since the last call, in publication order.
  std::vector<Event> take_published();

 private:
  struct Instance {
    InstanceState state;
    const ProcessDefinition* def = nullptr;  // null for ad-hoc activities
  };

  using Lock = std::unique_lock<std::shared_mutex>;

  Event make(std::string_view etype, std::string source, SimTime now, Attributes attrs);
  Event status_event(const Instance& inst, const ActivityState& a, ActivityStatus previous,
                     SimTime now);
  std::vector<Event> publish_all(std::vector<Event> events);
  std::string start_instance_locked(const ProcessDefinition& def, SimTime now,
                                    std::vector<Event>& out);
  void set_status_locked(Instance& inst, ActivityState& a, ActivityStatus status, SimTime now,
                         std::vector<Event>& out);
  void advance_locked(Instance& inst, const Event& trigger, SimTime now, std::vector<Event>& out);
  Instance& instance_locked(std::string_view id);
  Reservation& reservation_locked(std::string_view id);

  Broker& broker_;
  IdGenerator& ids_;
  Duration lead_time_{std::chrono::minutes(5)};

  mutable std::shared_mutex mu_;
  std::map<std::string, ProcessDefinition, std::less<>> processes_;
  std::vector<std::string> process_order_;
  std::vector<Instance> instances_;
  std::map<std::string, std::size_t, std::less<>> instance_index_;
  std::map<std::string, std::size_t, std::less<>> instance_counter_;
  std::map<std::string, bool, std::less<>> triggered_started_;
  std::map<std::string, InventoryEntry, std::less<>> inventory_;
  std::vector<Reservation> reservations_;
  std::uint64_t next_reservation_ = 1;

  std::mutex outbox_mu_;
  std::vector<Event> outbox_;
};

}  // namespace emcloud::flow
