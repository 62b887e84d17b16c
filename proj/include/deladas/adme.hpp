#pragma once

#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "deladas/ddd.hpp"
#include "deladas/fabric.hpp"
#include "deladas/model.hpp"
#include "deladas/solver.hpp"

namespace deladas {

// ---------------------------------------------------------------------------
// Autonomic Deployment and Management Engine
// ---------------------------------------------------------------------------

enum class AdmePhase { Steady, Resolving, Enacting, StalledUnsat, Stopped };

inline const char* to_string(AdmePhase p) {
  switch (p) {
    case AdmePhase::Steady: return "STEADY";
    case AdmePhase::Resolving: return "RESOLVING";
    case AdmePhase::Enacting: return "ENACTING";
    case AdmePhase::StalledUnsat: return "STALLED_UNSAT";
    case AdmePhase::Stopped: return "STOPPED";
  }
  return "?";
}

struct PhaseTransition {
  int64_t tick = 0;
  AdmePhase from = AdmePhase::Steady;
  AdmePhase to = AdmePhase::Steady;
  std::string cause;
};

struct AdmeStatus {
  AdmePhase phase = AdmePhase::Steady;
  int goal_revision = 0;
  CheckResult last_verdict;
  std::vector<PhaseTransition> history;  // append-only, ordered by tick
};

/// Updates the goal's resource pool from probe events: failed hosts are
/// marked FAILED (never deleted), added hosts appended as AVAILABLE.
/// Component failures are the solver's concern and leave resources alone.
/// The revision is bumped iff anything changed; constraints are never
/// modified.
inline Goal evolve_goal(Goal goal, const std::vector<ProbeEvent>& events) {
  bool changed = false;
  for (const auto& event : events) {
    switch (event.kind) {
      case ProbeKind::HostFailed:
        for (auto& h : goal.hosts)
          if (h.id == event.subject && h.status == HostStatus::Available) {
            h.status = HostStatus::Failed;
            changed = true;
          }
        break;
      case ProbeKind::HostAdded:
        if (!goal.find_host(event.subject)) {
          goal.hosts.push_back({event.subject, HostStatus::Available});
          changed = true;
        }
        break;
      case ProbeKind::ComponentFailed:
        break;
    }
  }
  if (changed) ++goal.revision;
  return goal;
}

struct AssessResult {
  bool satisfied = false;
  std::vector<ClauseViolation> violations;
};

/// Violation detection is re-evaluation of the declarative goal against the
/// observed topology, not event pattern matching.
inline AssessResult assess(const Goal& goal, const Configuration& observed) {
  CheckResult check = check_configuration(observed, goal);
  return {check.valid, check.violations};
}

namespace detail {

inline std::string violations_text(const std::vector<ClauseViolation>& v) {
  std::ostringstream out;
  out << "[";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out << ",";
    out << v[i].index;
  }
  out << "]";
  return out.str();
}

inline std::string events_text(const std::vector<ProbeEvent>& events) {
  std::ostringstream out;
  out << "[";
  for (size_t i = 0; i < events.size(); ++i) {
    if (i) out << ",";
    out << to_string(events[i].kind) << "(" << events[i].subject << ")";
  }
  out << "]";
  return out.str();
}

}  // namespace detail

/// Single-threaded control loop owning the goal, status, and fabric. One
/// step per logical tick: poll probes, evolve the goal, assess the observed
/// configuration, and re-solve/re-enact the delta when the goal is
/// violated. UNSAT parks the engine in STALLED_UNSAT; it keeps polling so
/// newly added hosts can unstall it.
class AdmeEngine {
 public:
  explicit AdmeEngine(Goal goal, SolveOptions opts = {})
      : goal_(std::move(goal)), opts_(opts), fabric_(make_fabric(goal_)) {
    status_.goal_revision = goal_.revision;
  }

  const Goal& goal() const { return goal_; }
  const AdmeStatus& status() const { return status_; }
  const FabricState& fabric() const { return fabric_; }
  FabricState& fabric() { return fabric_; }
  const std::vector<std::string>& log() const { return log_; }
  int64_t tick() const { return tick_; }
  int64_t solver_calls() const { return solver_calls_; }

  void inject_event(const ScenarioEvent& event) {
    if (auto rejected = inject(event, fabric_))
      log_line("warning: " + rejected->message);
  }

  /// One poll -> evolve -> assess -> recover iteration.
  void step() {
    std::vector<ProbeEvent> events = poll_events(fabric_);
    if (status_.phase == AdmePhase::StalledUnsat && events.empty())
      return;  // nothing changed; stay parked until the fabric reports news

    Goal evolved = evolve_goal(goal_, events);
    bool goal_changed = evolved.revision != goal_.revision;
    goal_ = std::move(evolved);
    status_.goal_revision = goal_.revision;

    Configuration observed = observe(fabric_);
    AssessResult verdict = assess(goal_, observed);
    status_.last_verdict = {verdict.satisfied, verdict.violations};
    if (verdict.satisfied) {
      if (status_.phase != AdmePhase::Steady)
        transition(AdmePhase::Steady,
                   "observed configuration satisfies goal revision " +
                       std::to_string(goal_.revision));
      else if (!events.empty())
        log_line("phase=STEADY cause=events=" + detail::events_text(events) +
                 " goal-revision=" + std::to_string(goal_.revision) +
                 " still satisfied, no reconfiguration needed");
      return;
    }

    std::string cause = "violated=" + detail::violations_text(verdict.violations);
    if (!events.empty()) cause += " events=" + detail::events_text(events);
    if (goal_changed) cause += " goal-revision=" + std::to_string(goal_.revision);
    transition(AdmePhase::Resolving, cause);

    ++solver_calls_;
    SolveResult solved = solve_incremental(goal_, observed, opts_);
    if (solved.status != SolveStatus::Sat) {
      transition(AdmePhase::StalledUnsat,
                 std::string("re-solve returned ") + to_string(solved.status) +
                     " nodes=" + std::to_string(solved.nodes_explored));
      return;
    }

    ReconfigurationPlan plan = diff(observed, solved.solutions.front());
    transition(AdmePhase::Enacting,
               "solved status=SAT nodes=" + std::to_string(solved.nodes_explored) +
                   " plan-actions=" + std::to_string(plan.size()));
    if (auto failed = enact(plan, fabric_)) {
      transition(AdmePhase::Resolving,
                 "enactment failed at action " +
                     std::to_string(failed->action_index) + ": " + failed->reason);
      return;  // next step re-assesses and retries
    }
    fabric_.last_enacted_revision = goal_.revision;
    transition(AdmePhase::Steady, "enacted plan");
  }

  void stop() { transition(AdmePhase::Stopped, "stopped"); }

  /// Full goal replacement (the administrator revised the goal file).
  /// Constraints and resources are both replaced; the revision continues
  /// from the running one so probes and plans stay correlated.
  void reload_goal(Goal next) {
    next.revision = goal_.revision + 1;
    goal_ = std::move(next);
    status_.goal_revision = goal_.revision;
    log_line("goal reloaded, revision=" + std::to_string(goal_.revision));
    if (status_.phase == AdmePhase::StalledUnsat)
      transition(AdmePhase::Resolving, "goal reloaded while stalled");
  }

  /// Schedules a reload_goal to happen at the start of the given tick of
  /// the next run().
  void schedule_goal_reload(Goal next, int64_t tick) {
    pending_reload_ = {tick, std::move(next)};
  }

  /// Advances `max_ticks` logical ticks starting at tick 0 (the cold-start
  /// solve), injecting scenario events when their tick arrives.
  void run(const std::vector<ScenarioEvent>& scenario, int64_t max_ticks,
           const std::function<void(const AdmeEngine&)>& per_tick = {}) {
    size_t next_event = 0;
    for (tick_ = 0; tick_ < max_ticks; ++tick_) {
      if (status_.phase == AdmePhase::Stopped) break;
      fabric_.clock = tick_;
      if (pending_reload_ && pending_reload_->first <= tick_) {
        reload_goal(std::move(pending_reload_->second));
        pending_reload_.reset();
      }
      while (next_event < scenario.size() &&
             scenario[next_event].tick <= tick_) {
        inject_event(scenario[next_event]);
        ++next_event;
      }
      step();
      if (per_tick) per_tick(*this);
    }
  }

 private:
  Goal goal_;
  SolveOptions opts_;
  FabricState fabric_;
  AdmeStatus status_;
  std::vector<std::string> log_;
  int64_t tick_ = 0;
  int64_t solver_calls_ = 0;
  std::optional<std::pair<int64_t, Goal>> pending_reload_;

  void log_line(const std::string& text) {
    log_.push_back("tick=" + std::to_string(tick_) + " " + text);
  }

  void transition(AdmePhase to, const std::string& cause) {
    status_.history.push_back({tick_, status_.phase, to, cause});
    status_.phase = to;
    log_line(std::string("phase=") + to_string(to) + " cause=" + cause);
  }
};

struct RunReport {
  AdmeStatus status;
  Goal goal;
  FabricState fabric;
  std::vector<std::string> log;
  int64_t solver_calls = 0;
};

inline RunReport run(const Goal& goal, const std::vector<ScenarioEvent>& scenario,
                     int64_t max_ticks, const SolveOptions& opts = {},
                     const std::function<void(const AdmeEngine&)>& per_tick = {}) {
  AdmeEngine engine(goal, opts);
  engine.run(scenario, max_ticks, per_tick);
  return {engine.status(), engine.goal(), engine.fabric(), engine.log(),
          engine.solver_calls()};
}

/// Machine-readable status dump.
inline nlohmann::json status_to_json(const AdmeStatus& status) {
  nlohmann::json doc;
  doc["phase"] = to_string(status.phase);
  doc["goalRevision"] = status.goal_revision;
  doc["lastVerdict"] = {{"valid", status.last_verdict.valid},
                        {"violatedClauses", nlohmann::json::array()}};
  for (const auto& v : status.last_verdict.violations)
    doc["lastVerdict"]["violatedClauses"].push_back(v.index);
  doc["history"] = nlohmann::json::array();
  for (const auto& t : status.history)
    doc["history"].push_back({{"tick", t.tick},
                              {"from", to_string(t.from)},
                              {"to", to_string(t.to)},
                              {"cause", t.cause}});
  return doc;
}

}  // namespace deladas
