#include "emcloud/cep/engine.hpp"

#include "emcloud/errors.hpp"

namespace emcloud::cep {

namespace {

bool on_period(SimTime now, Duration period) {
  return period > Duration{0} && now > kEpoch && now.count() % period.count() == 0;
}

}  // namespace

Engine::Engine(RuleConfig config, const HistorySource& history, IdGenerator& ids)
    : config_(std::move(config)),
      history_(history),
      ids_(ids),
      radiation_suppressor_(config_.suppression),
      wind_suppressor_(config_.suppression),
      confinement_suppressor_(config_.suppression) {
  config_.validate();
}

std::vector<Event> Engine::on_event(const Event& e, SimTime now) {
  if (last_ts_ && e.ts < *last_ts_ - config_.out_of_order_slack) {
    throw OutOfOrder("event " + e.id + " at " + format_sim_time(e.ts) + " arrived after " +
                     format_sim_time(*last_ts_));
  }
  if (!last_ts_ || e.ts > *last_ts_) last_ts_ = e.ts;

  if (e.etype == etypes::kRadiationMeasure) return on_radiation(e, now);
  if (e.etype == etypes::kWindSpeedMeasure || e.etype == etypes::kWindDirectionMeasure) {
    return on_wind(e, now);
  }
  if (auto cascaded = eval_cascade(e, ids_)) {
    cascaded->ts = now;
    return {std::move(*cascaded)};
  }
  return {};
}

std::vector<Event> Engine::on_radiation(const Event& e, SimTime now) {
  auto& st = radiation_[e.source];
  const double value = e.number("value").value_or(0.0);
  if (st.last_ts && e.ts > *st.last_ts) {
    st.cumulative_dose += value * std::chrono::duration<double, std::ratio<3600>>(e.ts - *st.last_ts).count();
  }
  st.last_ts = e.ts;
  st.window.push(e.ts, value);
  st.window.trim(e.ts, config_.radiation_window);

  auto alert = eval_radiation_rule(e.source, st.window, config_, radiation_suppressor_, now, ids_, e.geo);
  if (!alert) return {};
  alert->attrs.insert_or_assign("cumulative_dose", st.cumulative_dose);
  alert->attrs.insert_or_assign(
      "zone", std::string(to_string(classify_barrier(value, st.cumulative_dose, config_.thresholds))));
  return {std::move(*alert)};
}

std::vector<Event> Engine::on_wind(const Event& e, SimTime now) {
  auto& st = wind_[e.source];
  if (e.etype == etypes::kWindSpeedMeasure) {
    st.speed.push(e.ts, e.number("speed").value_or(0.0));
  } else {
    st.direction.push(e.ts, e.number("direction").value_or(0.0));
  }
  st.speed.trim(e.ts, config_.wind_window);
  st.direction.trim(e.ts, config_.wind_window);

  auto alert = eval_wind_rule(e.source, st.speed, st.direction, config_, wind_suppressor_, now, ids_, e.geo);
  if (!alert) return {};
  return {std::move(*alert)};
}

std::vector<Event> Engine::on_tick(SimTime now) {
  std::vector<Event> out;
  if (!on_period(now, config_.report_period)) return out;
  out.push_back(build_report(history_, now, config_, ids_));
  if (!confinement_suppressor_.suppressed("confinement", now)) {
    if (auto suggestion = eval_confinement_trigger(history_, now, config_, ids_)) {
      confinement_suppressor_.record("confinement", now);
      out.push_back(std::move(*suggestion));
    }
  }
  return out;
}

bool Engine::sar_tick_due(SimTime now) const { return on_period(now, config_.sar_period); }

double Engine::cumulative_dose(const std::string& sensor) const {
  auto it = radiation_.find(sensor);
  return it == radiation_.end() ? 0.0 : it->second.cumulative_dose;
}

}  // namespace emcloud::cep
