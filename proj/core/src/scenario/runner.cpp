#include "emcloud/scenario/runner.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>
#include <thread>

#include "emcloud/errors.hpp"

namespace emcloud::scenario {

namespace {

constexpr std::string_view kDecisionSource = "decisions";
constexpr std::string_view kDefaultProposalRole = "RepresentativeNationalAuthority";
constexpr int kMaxRoundsPerTick = 256;

std::string join_options(const std::vector<OptionView>& options) {
  std::string out;
  for (const auto& o : options) {
    if (!out.empty()) out += ',';
    out += o.id;
  }
  return out;
}

void sort_by_seq(std::vector<Event>& events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.seq.value_or(0) < b.seq.value_or(0); });
}

}  // namespace

Speed parse_speed(std::string_view text) {
  if (text == "max") return Speed::max();
  double factor = 0.0;
  auto r = std::from_chars(text.data(), text.data() + text.size(), factor);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size() || !(factor > 0.0)) {
    throw std::invalid_argument("speed must be \"max\" or a positive factor, got '" + std::string(text) + "'");
  }
  return Speed::real_time(factor);
}

Runner::Runner(ScenarioScript script, DecisionSource& source, RunOptions options)
    : script_(std::move(script)),
      source_(source),
      options_(options),
      ids_(options.seed.value_or(script_.seed)),
      broker_(script_.n_shards, DeliveryMode::Batched),
      dcep_(script_.rules, broker_, ids_),
      orchestrator_(broker_, ids_),
      recommender_(orchestrator_, broker_, ids_) {
  script_.validate(!source_.interactive());
  const auto seed = options.seed.value_or(script_.seed);
  for (const auto& g : script_.sensor_groups) groups_.emplace_back(g, seed);
  for (const auto& def : script_.processes) orchestrator_.load_process(def);
  for (const auto& [kind, total] : script_.inventory) orchestrator_.set_inventory(kind, total);
  orchestrator_.set_lead_time(script_.reservation_lead_time);
  if (options_.log_out != nullptr) broker_.attach_log(*options_.log_out);
}

Runner::~Runner() { board_.close(); }

const SensorGroup* Runner::group(std::string_view id) const {
  for (const auto& g : groups_) {
    if (g.id() == id) return &g;
  }
  return nullptr;
}

SensorGroup& Runner::group_mut(std::string_view id) {
  for (auto& g : groups_) {
    if (g.id() == id) return g;
  }
  throw SemanticError("unknown sensor group '" + std::string(id) + "'");
}

void Runner::abort() {
  aborted_ = true;
  board_.close();
}

void Runner::publish(Event e) { staged_.push_back(broker_.post(std::move(e))); }

void Runner::collect_outboxes() {
  for (auto& e : orchestrator_.take_published()) staged_.push_back(std::move(e));
  for (auto& e : recommender_.take_published()) staged_.push_back(std::move(e));
}

void Runner::activate(std::string_view gid, std::size_t count, SimTime now, bool emit_now) {
  auto& g = group_mut(gid);
  const std::size_t first = g.active();
  activate_sensors(g, count, now);
  const auto cadence = g.spec().cadence.count();
  if (emit_now && now.count() % cadence == 0) {
    for (auto& e : g.emit(now, first, g.active(), ids_)) publish(std::move(e));
  }
}

void Runner::issue(DecisionPoint p, SimTime now) {
  issued_ids_.insert(p.id);
  publish(make_event(std::string(etypes::kDecisionPoint), std::string(kDecisionSource), now,
                     {{"point", p.id},
                      {"role", p.role},
                      {"prompt", p.prompt},
                      {"options", join_options(p.options)},
                      {"due_ts", static_cast<std::int64_t>(p.due_ts.count())},
                      {"proposal", p.proposal}},
                     std::nullopt, ids_));
  board_.issue(p);
  pending_points_.push_back(std::move(p));
}

void Runner::issue_points(const std::vector<Event>& events, SimTime now) {
  for (const auto& e : events) {
    const bool is_proposal = e.etype == etypes::kAdaptationProposal;
    bool claimed = false;
    for (const auto& spec : script_.decision_points) {
      if (!spec.proposal) {
        if (fired_points_.contains(spec.id) || !match(spec.trigger, e)) continue;
        fired_points_.insert(spec.id);
        DecisionPoint p;
        p.id = spec.id;
        p.spec_id = spec.id;
        p.role = spec.role;
        p.prompt = spec.prompt;
        for (const auto& o : spec.options) p.options.push_back({o.id, o.label});
        p.context = {e.id};
        p.issued_ts = now;
        p.due_ts = now + spec.scripted_delay;
        p.scripted_choice = spec.scripted_choice;
        issue(std::move(p), now);
        continue;
      }
      if (!is_proposal || claimed || !match(spec.trigger, e)) continue;
      auto pid = e.text("proposal");
      if (!pid || issued_ids_.contains(*pid)) continue;
      auto proposal = recommender_.proposal(*pid);
      if (!proposal) continue;
      claimed = true;
      DecisionPoint p;
      p.id = *pid;
      p.spec_id = spec.id;
      p.role = spec.role;
      p.prompt = spec.prompt;
      for (const auto& a : proposal->alternatives) p.options.push_back({a.id, a.label});
      p.context = {e.id};
      p.issued_ts = now;
      p.due_ts = now + spec.scripted_delay;
      p.proposal = true;
      p.scripted_choice = spec.scripted_choice;
      issue(std::move(p), now);
    }
    if (is_proposal && !claimed && source_.interactive()) {
      auto pid = e.text("proposal");
      if (!pid || issued_ids_.contains(*pid)) continue;
      auto proposal = recommender_.proposal(*pid);
      if (!proposal) continue;
      DecisionPoint p;
      p.id = *pid;
      p.role = std::string(kDefaultProposalRole);
      p.prompt = std::string(sar::to_string(proposal->gap.kind)) + " on " + proposal->gap.subject;
      for (const auto& a : proposal->alternatives) p.options.push_back({a.id, a.label});
      p.context = {e.id};
      p.issued_ts = now;
      p.due_ts = now;
      p.proposal = true;
      issue(std::move(p), now);
    }
  }
}

void Runner::apply_choice(const DecisionPoint& p, const Choice& c, SimTime now) {
  if (!p.has_option(c.option)) {
    throw UnknownPoint("decision point '" + p.id + "' has no option '" + c.option + "'");
  }
  Attributes attrs{{"point", p.id}, {"option", c.option}, {"chooser", c.chooser}};
  if (p.proposal) attrs.emplace("proposal", p.id);
  auto recorded = broker_.post(make_event(std::string(etypes::kDecisionChoice), p.role, now,
                                          std::move(attrs), std::nullopt, ids_));
  const auto seq = *recorded.seq;
  staged_.push_back(std::move(recorded));
  board_.record(p.id, c, seq);
  choices_.push_back(c);

  if (p.proposal) {
    recommender_.apply_choice(p.id, c.option, c.chooser, now);
    collect_outboxes();
    return;
  }
  const DecisionPointSpec* spec = nullptr;
  for (const auto& s : script_.decision_points) {
    if (s.id == p.spec_id) spec = &s;
  }
  const OptionSpec* option = spec == nullptr ? nullptr : spec->option(c.option);
  if (option == nullptr) return;
  for (const auto& eff : option->effects) {
    switch (eff.kind) {
      case EffectSpec::Kind::Activate:
        activate(eff.group, static_cast<std::size_t>(eff.count), now, true);
        break;
      case EffectSpec::Kind::RequestResources:
        orchestrator_.request_resources(eff.resource_kind, eff.quantity, eff.holder, now);
        break;
      case EffectSpec::Kind::Emit:
        publish(make_event(eff.event.etype, eff.event.source.value_or(p.role), now, eff.event.attrs,
                           std::nullopt, ids_));
        break;
    }
  }
  collect_outboxes();
}

void Runner::apply_due_choices(SimTime now) {
  // Points issued while applying choices are picked up in the next round.
  auto due = pending_points_;
  pending_points_.clear();
  for (auto& p : due) {
    if (p.due_ts > now) {
      pending_points_.push_back(std::move(p));
      continue;
    }
    if (aborted_) throw AbortedByOperator("run aborted");
    Choice c;
    if (source_.interactive()) {
      broker_.flush();  // let clients see what they are deciding on
      paused_ = true;
      const auto wall0 = std::chrono::steady_clock::now();
      try {
        c = source_.decide(p, board_, now);
      } catch (...) {
        paused_ = false;
        throw;
      }
      paused_ = false;
      pauses_.push_back({now, p.id, std::chrono::steady_clock::now() - wall0});
    } else {
      c = source_.decide(p, board_, now);
    }
    c.point = p.id;
    c.ts = now;
    apply_choice(p, c, now);
  }
}

std::vector<Event> Runner::round(std::vector<Event> fresh, bool first, SimTime now) {
  std::vector<Event> derived;
  for (const auto& e : fresh) {
    for (auto& d : dcep_.on_event(e, now)) derived.push_back(broker_.post(std::move(d)));
  }
  if (first) {
    for (auto& d : dcep_.on_tick(now)) derived.push_back(broker_.post(std::move(d)));
  }
  std::vector<Event> sar_events;
  if (first && dcep_.sar_tick_due(now)) {
    recommender_.on_tick(now);
    sar_events = recommender_.take_published();
  }

  std::vector<Event> routed = std::move(fresh);
  routed.insert(routed.end(), derived.begin(), derived.end());
  routed.insert(routed.end(), sar_events.begin(), sar_events.end());

  staged_.clear();
  orchestrator_.dispatch(routed, now);
  collect_outboxes();

  std::vector<Event> scan = routed;
  scan.insert(scan.end(), staged_.begin(), staged_.end());
  issue_points(scan, now);
  apply_due_choices(now);

  std::vector<Event> next = std::move(staged_);
  staged_.clear();
  sort_by_seq(next);
  return next;
}

void Runner::step(SimTime now) {
  staged_.clear();
  if (now == SimTime{0}) orchestrator_.start_epoch_processes(now);
  collect_outboxes();
  for (const auto& inj : script_.injections) {
    if (inj.at != now) continue;
    switch (inj.kind) {
      case Injection::Kind::Event:
        publish(make_event(inj.event.etype, inj.event.source, now, inj.event.attrs, inj.event.geo, ids_));
        break;
      case Injection::Kind::FieldLoss:
        orchestrator_.report_field_loss(inj.reservation, inj.quantity, now);
        break;
      case Injection::Kind::Release:
        orchestrator_.release_resources(inj.reservation, now);
        break;
      case Injection::Kind::Activate:
        activate(inj.group, static_cast<std::size_t>(inj.quantity), now, false);
        break;
      case Injection::Kind::RequestResources:
        orchestrator_.request_resources(inj.resource_kind, inj.quantity, inj.holder, now);
        break;
    }
    collect_outboxes();
  }
  orchestrator_.deliver_due(now);
  collect_outboxes();
  for (const auto& g : groups_) {
    for (auto& e : sensor_tick(g, now, ids_)) publish(std::move(e));
  }

  std::vector<Event> fresh = std::move(staged_);
  staged_.clear();
  sort_by_seq(fresh);
  bool first = true;
  for (int rounds = 0;; ++rounds) {
    if (rounds >= kMaxRoundsPerTick) {
      throw std::runtime_error("tick " + format_sim_time(now) + " did not settle");
    }
    fresh = round(std::move(fresh), first, now);
    first = false;
    if (fresh.empty()) break;
  }
}

RunLog Runner::run() {
  if (started_) throw std::logic_error("Runner::run called twice");
  started_ = true;
  const auto tick = script_.tick;
  const auto wall_start = std::chrono::steady_clock::now();
  for (SimTime now{0}; now <= script_.end_ts; now += tick) {
    if (aborted_) throw AbortedByOperator("run aborted at " + format_sim_time(now));
    if (options_.speed.mode == Speed::Mode::RealTime) {
      std::chrono::steady_clock::duration paused{0};
      for (const auto& p : pauses_) paused += p.wall;
      const auto offset = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double, std::milli>(static_cast<double>(now.count()) / options_.speed.factor));
      std::this_thread::sleep_until(wall_start + paused + offset);
    }
    now_ms_ = now.count();
    step(now);
    broker_.flush();
  }
  recommender_.expire_open();
  finished_ = true;
  RunLog log;
  log.events = broker_.log();
  log.end_ts = script_.end_ts;
  log.choices = choices_;
  log.pauses = pauses_;
  return log;
}

RunLog run(const ScenarioScript& script, DecisionSource& source, Speed speed) {
  RunOptions opts;
  opts.speed = speed;
  Runner runner(script, source, opts);
  return runner.run();
}

}  // namespace emcloud::scenario
