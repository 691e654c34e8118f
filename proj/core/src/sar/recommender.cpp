#include "emcloud/sar/recommender.hpp"

#include <algorithm>

#include "emcloud/errors.hpp"

namespace emcloud::sar {

namespace {

constexpr std::string_view kSarSource = "sar";

std::string join_ids(const std::vector<AlternativeSpec>& alts) {
  std::string out;
  for (const auto& a : alts) {
    if (!out.empty()) out += ',';
    out += a.id;
  }
  return out;
}

std::pair<std::string, std::string> split_subject(const std::string& subject) {
  const auto slash = subject.find('/');
  if (slash == std::string::npos) return {subject, {}};
  return {subject.substr(0, slash), subject.substr(slash + 1)};
}

}  // namespace

std::string_view to_string(GapKind k) {
  switch (k) {
    case GapKind::ResourceGap: return "ResourceGap";
    case GapKind::StatusGap: return "StatusGap";
  }
  throw UnknownGapKind("gap kind " + std::to_string(static_cast<int>(k)));
}

GapKind parse_gap_kind(std::string_view s) {
  if (s == "ResourceGap") return GapKind::ResourceGap;
  if (s == "StatusGap") return GapKind::StatusGap;
  throw UnknownGapKind("unknown gap kind '" + std::string(s) + "'");
}

std::string_view to_string(ProposalState s) {
  switch (s) {
    case ProposalState::Open: return "Open";
    case ProposalState::Chosen: return "Chosen";
    case ProposalState::Expired: return "Expired";
  }
  return "?";
}

std::vector<AlternativeSpec> alternatives_for(GapKind kind) {
  switch (kind) {
    case GapKind::ResourceGap:
      return {
          {"AskForNewResource", "Ask for a new resource", Effect::AskForNewResource},
          {"DispatchResidualTasksOnRemainingResources", "Dispatch residual tasks on remaining resources",
           Effect::DispatchResidualTasks},
      };
    case GapKind::StatusGap:
      return {
          {"RequireImmediateReporting", "Require immediate reporting", Effect::RequireImmediateReporting},
          {"SendSomeoneOnTheField", "Send someone on the field", Effect::SendSomeoneOnTheField},
          {"Wait", "Wait", Effect::Wait},
      };
  }
  throw UnknownGapKind("gap kind " + std::to_string(static_cast<int>(kind)));
}

std::pair<TheoreticalModel, SituationalModel> snapshot_models(const flow::OrchestratorSnapshot& s,
                                                              SimTime now) {
  TheoreticalModel theo;
  SituationalModel sit;
  theo.at = now;
  sit.at = now;
  for (const auto& r : s.reservations) {
    if (!r.active) continue;
    theo.requested[r.id] = r.requested;
    sit.committed[r.id] = r.committed;
  }
  for (const auto& inst : s.instances) {
    for (const auto& a : inst.activities) {
      const std::string key = inst.instance_id + "/" + a.activity_id;
      const bool overdue = a.intended_finish_ts && now > *a.intended_finish_ts;
      theo.intended[key] = overdue ? flow::ActivityStatus::Finished : a.status;
      sit.current[key] = a.status;
    }
  }
  return {std::move(theo), std::move(sit)};
}

std::vector<Gap> detect_gaps(const TheoreticalModel& theoretical, const SituationalModel& situational) {
  std::vector<Gap> out;
  for (const auto& [id, requested] : theoretical.requested) {
    auto it = situational.committed.find(id);
    const std::int64_t committed = it == situational.committed.end() ? 0 : it->second;
    if (committed != requested) {
      out.push_back({GapKind::ResourceGap, id, Scalar{requested}, Scalar{committed}, situational.at});
    }
  }
  for (const auto& [id, intended] : theoretical.intended) {
    auto it = situational.current.find(id);
    if (it == situational.current.end() || it->second == intended) continue;
    out.push_back({GapKind::StatusGap, id, Scalar{std::string(flow::to_string(intended))},
                   Scalar{std::string(flow::to_string(it->second))}, situational.at});
  }
  return out;
}

Recommender::Recommender(flow::Orchestrator& orchestrator, Broker& broker, IdGenerator& ids)
    : Recommender(orchestrator, broker, ids, Options{}) {}

Recommender::Recommender(flow::Orchestrator& orchestrator, Broker& broker, IdGenerator& ids,
                         Options options)
    : orchestrator_(orchestrator), broker_(broker), ids_(ids), options_(std::move(options)) {}

Event Recommender::post(std::string_view etype, SimTime now, Attributes attrs) {
  auto e = broker_.post(make_event(std::string(etype), std::string(kSarSource), now,
                                   std::move(attrs), std::nullopt, ids_));
  outbox_.push_back(e);
  return e;
}

AdaptationProposal Recommender::propose(const Gap& gap, SimTime now) {
  auto alternatives = alternatives_for(gap.kind);
  const auto snap = orchestrator_.snapshot(now);

  std::lock_guard lock(mu_);
  AdaptationProposal p;
  p.proposal_id = "prop-" + std::to_string(next_id_++);
  p.gap = gap;
  p.alternatives = std::move(alternatives);
  p.issued_ts = now;

  Attributes attrs{
      {"proposal", p.proposal_id},
      {"gap_kind", std::string(to_string(gap.kind))},
      {"subject", gap.subject},
      {"expected", gap.expected},
      {"actual", gap.actual},
      {"alternatives", join_ids(p.alternatives)},
  };
  if (gap.kind == GapKind::ResourceGap) {
    if (const auto* r = snap.reservation(gap.subject)) {
      attrs.emplace("reservation", r->id);
      attrs.emplace("kind", r->kind);
      attrs.emplace("holder", r->holder);
    }
  } else {
    auto [instance, activity] = split_subject(gap.subject);
    attrs.emplace("instance", instance);
    attrs.emplace("activity", activity);
    if (const auto* inst = snap.instance(instance)) {
      if (const auto* a = inst->activity(activity)) attrs.emplace("lane", a->lane);
    }
  }
  proposals_.push_back(p);
  post(etypes::kAdaptationProposal, now, std::move(attrs));
  return p;
}

std::vector<Event> Recommender::on_tick(SimTime now) {
  const auto [theo, sit] = snapshot_models(orchestrator_.snapshot(now), now);
  const auto gaps = detect_gaps(theo, sit);
  std::vector<Event> out;
  for (const auto& g : gaps) {
    bool open = false;
    {
      std::lock_guard lock(mu_);
      open = std::any_of(proposals_.begin(), proposals_.end(), [&](const AdaptationProposal& p) {
        return p.state == ProposalState::Open && p.gap.kind == g.kind && p.gap.subject == g.subject;
      });
    }
    if (open) continue;
    propose(g, now);
    std::lock_guard lock(mu_);
    out.push_back(outbox_.back());
  }
  return out;
}

std::vector<Event> Recommender::apply_choice(std::string_view proposal_id,
                                             std::string_view alternative_id,
                                             std::string_view chooser, SimTime now) {
  std::lock_guard lock(mu_);
  auto it = std::find_if(proposals_.begin(), proposals_.end(),
                         [&](const AdaptationProposal& p) { return p.proposal_id == proposal_id; });
  if (it == proposals_.end()) throw UnknownProposal("unknown proposal '" + std::string(proposal_id) + "'");
  if (it->state != ProposalState::Open) {
    throw ProposalClosed("proposal '" + it->proposal_id + "' is " + std::string(to_string(it->state)));
  }
  auto alt = std::find_if(it->alternatives.begin(), it->alternatives.end(),
                          [&](const AlternativeSpec& a) { return a.id == alternative_id; });
  if (alt == it->alternatives.end()) {
    throw UnknownAlternative("proposal '" + it->proposal_id + "' has no alternative '" +
                             std::string(alternative_id) + "'");
  }

  const std::size_t first = outbox_.size();
  const auto snap = orchestrator_.snapshot(now);
  const Gap& gap = it->gap;
  switch (alt->effect) {
    case Effect::DispatchResidualTasks: {
      const auto* r = snap.reservation(gap.subject);
      if (r == nullptr) throw UnknownReservation("reservation '" + gap.subject + "' is closed");
      orchestrator_.set_requested(r->id, r->committed);
      post(etypes::kTaskAssignment, now,
           {{"proposal", it->proposal_id},
            {"reservation", r->id},
            {"kind", r->kind},
            {"units", r->committed},
            {"holder", r->holder},
            {"tasks", std::string("residual")}});
      break;
    }
    case Effect::AskForNewResource: {
      const auto* r = snap.reservation(gap.subject);
      if (r == nullptr) throw UnknownReservation("reservation '" + gap.subject + "' is closed");
      const std::int64_t missing = r->requested - r->committed;
      if (missing > 0) {
        orchestrator_.request_resources(r->kind, missing, r->holder, now);
        orchestrator_.set_requested(r->id, r->committed);
      }
      break;
    }
    case Effect::RequireImmediateReporting: {
      auto [instance, activity] = split_subject(gap.subject);
      std::string lane = options_.reporting_lane;
      if (const auto* inst = snap.instance(instance)) {
        if (const auto* a = inst->activity(activity); a != nullptr && !a->lane.empty()) lane = a->lane;
      }
      post(etypes::kReportRequest, now,
           {{"proposal", it->proposal_id},
            {"instance", instance},
            {"activity", activity},
            {"lane", lane},
            {"kind", std::string("immediate")}});
      break;
    }
    case Effect::SendSomeoneOnTheField: {
      auto [instance, activity] = split_subject(gap.subject);
      orchestrator_.start_adhoc_activity("field-check:" + activity, options_.reporting_lane,
                                         std::nullopt, now);
      break;
    }
    case Effect::Wait:
      break;
  }
  it->state = ProposalState::Chosen;
  it->chosen = std::string(alternative_id);
  it->chooser = std::string(chooser);
  return {outbox_.begin() + static_cast<std::ptrdiff_t>(first), outbox_.end()};
}

void Recommender::expire_open() {
  std::lock_guard lock(mu_);
  for (auto& p : proposals_) {
    if (p.state == ProposalState::Open) p.state = ProposalState::Expired;
  }
}

std::vector<AdaptationProposal> Recommender::proposals() const {
  std::lock_guard lock(mu_);
  return proposals_;
}

std::optional<AdaptationProposal> Recommender::proposal(std::string_view id) const {
  std::lock_guard lock(mu_);
  for (const auto& p : proposals_) {
    if (p.proposal_id == id) return p;
  }
  return std::nullopt;
}

std::vector<Event> Recommender::take_published() {
  std::lock_guard lock(mu_);
  std::vector<Event> out;
  out.swap(outbox_);
  return out;
}

}  // namespace emcloud::sar
