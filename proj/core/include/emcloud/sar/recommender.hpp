#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "emcloud/broker.hpp"
#include "emcloud/event.hpp"
#include "emcloud/flow/orchestrator.hpp"

namespace emcloud::sar {

enum class GapKind { ResourceGap, StatusGap };

std::string_view to_string(GapKind k);
/// Throws UnknownGapKind.
GapKind parse_gap_kind(std::string_view s);

/// Planned state. Activity keys are "<instance>/<activity>".
struct TheoreticalModel {
  SimTime at{0};
  std::map<std::string, std::int64_t> requested;          // per active reservation
  std::map<std::string, flow::ActivityStatus> intended;   // per activity
};

/// Observed state, keyed like TheoreticalModel.
struct SituationalModel {
  SimTime at{0};
  std::map<std::string, std::int64_t> committed;
  std::map<std::string, flow::ActivityStatus> current;
};

struct Gap {
  GapKind kind = GapKind::ResourceGap;
  std::string subject;  // reservation id or "<instance>/<activity>"
  Scalar expected;
  Scalar actual;
  SimTime detected_ts{0};

  bool operator==(const Gap&) const = default;
};

enum class Effect {
  AskForNewResource,
  DispatchResidualTasks,
  RequireImmediateReporting,
  SendSomeoneOnTheField,
  Wait,
};

struct AlternativeSpec {
  std::string id;
  std::string label;
  Effect effect = Effect::Wait;

  bool operator==(const AlternativeSpec&) const = default;
};

enum class ProposalState { Open, Chosen, Expired };
std::string_view to_string(ProposalState s);

struct AdaptationProposal {
  std::string proposal_id;
  Gap gap;
  std::vector<AlternativeSpec> alternatives;
  ProposalState state = ProposalState::Open;
  std::optional<std::string> chosen;
  std::optional<std::string> chooser;
  SimTime issued_ts{0};
};

/// Alternatives offered for a gap kind, in display order.
/// Throws UnknownGapKind.
std::vector<AlternativeSpec> alternatives_for(GapKind kind);

/// Both models from one snapshot. An activity is intended Finished once
/// now is past its intended finish; otherwise its current status is the plan.
std::pair<TheoreticalModel, SituationalModel> snapshot_models(const flow::OrchestratorSnapshot& s,
                                                              SimTime now);

/// One gap per divergent reservation or activity: resources first, then
/// activities, each ordered by id.
std::vector<Gap> detect_gaps(const TheoreticalModel& theoretical, const SituationalModel& situational);

/// Service adaptation recommender.
///
/// on_tick runs in the engine context. apply_choice and proposals() may be
/// called from other threads; a proposal's effect runs at most once.
class Recommender {
 public:
  struct Options {
    std::string reporting_lane = "OfficeOfInfrastructureFieldTeam";
  };

  Recommender(flow::Orchestrator& orchestrator, Broker& broker, IdGenerator& ids);
  Recommender(flow::Orchestrator& orchestrator, Broker& broker, IdGenerator& ids, Options options);

  /// Publishes an AdaptationProposalEvent. Throws UnknownGapKind.
  AdaptationProposal propose(const Gap& gap, SimTime now);

  /// Detects gaps on a fresh snapshot and proposes for each one that has
  /// no Open proposal yet. Returns the published proposal events.
  std::vector<Event> on_tick(SimTime now);

  /// Throws UnknownProposal, ProposalClosed, UnknownAlternative. Effect
  /// errors leave the proposal Open. Returns the events the recommender
  /// published; orchestrator-side events go through the orchestrator.
  std::vector<Event> apply_choice(std::string_view proposal_id, std::string_view alternative_id,
                                  std::string_view chooser, SimTime now);

  /// Marks every Open proposal Expired.
  void expire_open();

  std::vector<AdaptationProposal> proposals() const;
  std::vector<Event> take_published();
  std::optional<AdaptationProposal> proposal(std::string_view id) const;

 private:
  Event post(std::string_view etype, SimTime now, Attributes attrs);

  flow::Orchestrator& orchestrator_;
  Broker& broker_;
  IdGenerator& ids_;
  Options options_;

  mutable std::recursive_mutex mu_;
  std::vector<AdaptationProposal> proposals_;
  std::vector<Event> outbox_;
  std::uint64_t next_id_ = 1;
};

}  // namespace emcloud::sar
