#include <doctest.h>

#include <string>
#include <vector>

#include "deladas/adme.hpp"
#include "test_util.hpp"

using namespace deladas;

namespace {

int count_type(const Configuration& config, const std::string& type) {
  int n = 0;
  for (const auto& inst : config.instances)
    if (inst.type_name == type) ++n;
  return n;
}

bool steady_implies_valid(const AdmeEngine& engine) {
  if (engine.status().phase != AdmePhase::Steady) return true;
  return check_configuration(observe(engine.fabric()), engine.goal()).valid;
}

}  // namespace

TEST_CASE("evolve_goal marks failures, appends arrivals, bumps the revision") {
  Goal goal = testutil::load_randc();
  Goal evolved = evolve_goal(goal, {{ProbeKind::HostFailed, "h6", 3}});
  CHECK(evolved.revision == goal.revision + 1);
  CHECK(evolved.find_host("h6")->status == HostStatus::Failed);
  CHECK(evolved.hosts.size() == 6);  // failed hosts stay listed

  Goal same = evolve_goal(goal, {});
  CHECK(same.revision == goal.revision);

  Goal grown = evolve_goal(goal, {{ProbeKind::HostAdded, "h7", 5}});
  CHECK(grown.hosts.size() == 7);
  CHECK(grown.find_host("h7")->status == HostStatus::Available);
  CHECK(grown.revision == goal.revision + 1);

  Goal untouched = evolve_goal(goal, {{ProbeKind::ComponentFailed, "Client-1", 2}});
  CHECK(untouched.revision == goal.revision);
  CHECK(untouched.hosts.size() == 6);
}

TEST_CASE("evolve_goal never alters the constraint tree") {
  Goal goal = testutil::load_randc();
  Goal evolved = evolve_goal(goal, {{ProbeKind::HostFailed, "h1", 1}});
  evolved = evolve_goal(evolved, {{ProbeKind::HostAdded, "h9", 2}});
  evolved = evolve_goal(evolved, {{ProbeKind::ComponentFailed, "x", 3}});
  CHECK(ast_equal(goal.clauses, evolved.clauses));
}

TEST_CASE("assess: a freshly enacted deployment satisfies its goal") {
  Goal goal = testutil::load_randc();
  AssessResult verdict = assess(goal, testutil::classic_randc6());
  CHECK(verdict.satisfied);
}

TEST_CASE("assess: a failed client component violates the per-host clause") {
  Goal goal = testutil::load_randc();
  Configuration observed = testutil::classic_randc6();
  // Client-1 dies; its host h3 stays available but empty.
  observed.instances.erase(
      std::remove_if(observed.instances.begin(), observed.instances.end(),
                     [](const ComponentInstance& i) { return i.id == "Client-1"; }),
      observed.instances.end());
  observed.channels.erase(
      std::remove_if(observed.channels.begin(), observed.channels.end(),
                     [](const Channel& ch) {
                       return ch.from_instance == "Client-1" ||
                              ch.to_instance == "Client-1";
                     }),
      observed.channels.end());
  AssessResult verdict = assess(goal, canonicalize(observed));
  CHECK(!verdict.satisfied);
  REQUIRE(!verdict.violations.empty());
  CHECK(verdict.violations[0].index == 1);
}

TEST_CASE("assess: losing a router from a 2-router ring violates clauses 4 and 5") {
  Goal goal = testutil::load_randc(2);
  Configuration observed;
  observed.instances = {{"Router-1", "Router", "h1"}};
  AssessResult verdict = assess(goal, canonicalize(observed));
  CHECK(!verdict.satisfied);
  std::vector<int> indices;
  for (const auto& v : verdict.violations) indices.push_back(v.index);
  // Clause 1 also fails (h2 is empty); clauses 4 and 5 capture the ring loss.
  CHECK(std::find(indices.begin(), indices.end(), 4) != indices.end());
  // A lone router is reflexively reachable, so clause 5 still holds.
  CHECK(std::find(indices.begin(), indices.end(), 5) == indices.end());
}

TEST_CASE("a quiescent run stays steady with exactly one solver call") {
  Goal goal = testutil::load_randc();
  RunReport report = run(goal, {}, 10);
  CHECK(report.status.phase == AdmePhase::Steady);
  CHECK(report.solver_calls == 1);
  CHECK(check_configuration(observe(report.fabric), report.goal).valid);

  // Exactly one cold-start cycle in the history.
  REQUIRE(report.status.history.size() == 3);
  CHECK(report.status.history[0].to == AdmePhase::Resolving);
  CHECK(report.status.history[1].to == AdmePhase::Enacting);
  CHECK(report.status.history[2].to == AdmePhase::Steady);
}

TEST_CASE("steady ticks after cold start never call the solver again") {
  Goal goal = testutil::load_randc();
  AdmeEngine engine(goal);
  engine.run({}, 1);
  REQUIRE(engine.status().phase == AdmePhase::Steady);
  int64_t calls_after_cold_start = engine.solver_calls();
  engine.step();
  engine.step();
  CHECK(engine.solver_calls() == calls_after_cold_start);
  CHECK(engine.status().phase == AdmePhase::Steady);
}

TEST_CASE("client-host failure recovers with an empty plan (minimal disruption)") {
  Goal goal = testutil::load_randc();
  std::vector<ScenarioEvent> scenario = {{3, ScenarioEvent::Kind::FailHost, "h6"}};

  AdmeEngine engine(goal);
  engine.run({}, 1);  // cold start only
  size_t log_after_deploy = engine.fabric().enactment_log.size();
  int64_t solver_after_deploy = engine.solver_calls();

  engine.run(scenario, 10);
  CHECK(engine.status().phase == AdmePhase::Steady);
  CHECK(engine.goal().find_host("h6")->status == HostStatus::Failed);
  CHECK(engine.goal().revision == 1);
  Configuration final_config = observe(engine.fabric());
  CHECK(check_configuration(final_config, engine.goal()).valid);
  CHECK(final_config.instances.size() == 5);

  // The surviving deployment already satisfied the evolved goal: no solver
  // call, no enactment log growth.
  CHECK(engine.solver_calls() == solver_after_deploy);
  CHECK(engine.fabric().enactment_log.size() == log_after_deploy);
}

TEST_CASE("router-host failure triggers a real recovery cycle") {
  Goal goal = testutil::load_randc();
  std::vector<ScenarioEvent> scenario = {{3, ScenarioEvent::Kind::FailHost, "h2"}};
  bool safety = true;
  RunReport report = run(goal, scenario, 10, {}, [&](const AdmeEngine& e) {
    safety = safety && steady_implies_valid(e);
  });
  CHECK(safety);
  CHECK(report.status.phase == AdmePhase::Steady);
  Configuration final_config = observe(report.fabric);
  CHECK(check_configuration(final_config, report.goal).valid);
  CHECK(count_type(final_config, "Router") == 2);
  CHECK(report.solver_calls == 2);

  // Recovery preferred keeping every survivor: all four clients and
  // Router-1 stay on their hosts and a replacement router is added.
  CHECK(final_config.instances.size() == 6);
  CHECK(count_type(final_config, "Client") == 4);
  CHECK(final_config.find_instance("Router-1")->host == "h1");
  for (const auto& id : {"Client-1", "Client-2", "Client-3", "Client-4"})
    CHECK(final_config.find_instance(id) != nullptr);
}

TEST_CASE("failure with a simultaneous spare host populates the spare") {
  Goal goal = testutil::load_randc();
  std::vector<ScenarioEvent> scenario = {{3, ScenarioEvent::Kind::FailHost, "h6"},
                                         {3, ScenarioEvent::Kind::AddHost, "h7"}};
  RunReport report = run(goal, scenario, 10);
  CHECK(report.status.phase == AdmePhase::Steady);
  Configuration final_config = observe(report.fabric);
  CHECK(check_configuration(final_config, report.goal).valid);
  CHECK(final_config.instances.size() == 6);

  bool spare_used = false;
  for (const auto& inst : final_config.instances)
    if (inst.host == "h7") spare_used = true;
  CHECK(spare_used);
}

TEST_CASE("unsatisfiable recovery stalls, a new host unstalls it") {
  Goal goal = testutil::load_randc(2);
  std::vector<ScenarioEvent> scenario = {{2, ScenarioEvent::Kind::FailHost, "h2"},
                                         {5, ScenarioEvent::Kind::AddHost, "h3"}};
  std::vector<AdmePhase> phase_by_tick;
  RunReport report = run(goal, scenario, 8, {}, [&](const AdmeEngine& e) {
    phase_by_tick.push_back(e.status().phase);
  });
  REQUIRE(phase_by_tick.size() == 8);
  CHECK(phase_by_tick[1] == AdmePhase::Steady);
  CHECK(phase_by_tick[2] == AdmePhase::StalledUnsat);
  CHECK(phase_by_tick[3] == AdmePhase::StalledUnsat);
  CHECK(phase_by_tick[4] == AdmePhase::StalledUnsat);
  CHECK(phase_by_tick[5] == AdmePhase::Steady);

  Configuration final_config = observe(report.fabric);
  CHECK(check_configuration(final_config, report.goal).valid);
  CHECK(final_config.instances.size() == 2);
  CHECK(count_type(final_config, "Router") == 2);
}

TEST_CASE("an initially unsatisfiable goal reports STALLED_UNSAT at tick 0") {
  Goal goal = testutil::load_randc(1);
  RunReport report = run(goal, {}, 3);
  CHECK(report.status.phase == AdmePhase::StalledUnsat);
  CHECK(observe(report.fabric).instances.empty());
  REQUIRE(!report.status.history.empty());
  CHECK(report.status.history.front().tick == 0);
}

TEST_CASE("history is append-only and ordered by tick") {
  Goal goal = testutil::load_randc(2);
  std::vector<ScenarioEvent> scenario = {{2, ScenarioEvent::Kind::FailHost, "h2"},
                                         {5, ScenarioEvent::Kind::AddHost, "h3"}};
  RunReport report = run(goal, scenario, 8);
  for (size_t i = 1; i < report.status.history.size(); ++i)
    CHECK(report.status.history[i - 1].tick <= report.status.history[i].tick);
}

TEST_CASE("a silent host loss surfaces as an enactment failure and a retry") {
  Goal goal = testutil::load_randc();
  AdmeEngine engine(goal);
  engine.run({}, 1);
  REQUIRE(engine.status().phase == AdmePhase::Steady);

  // The host dies without a probe event: the goal still lists it as
  // available, so recovery keeps targeting it and enactment fails.
  engine.fabric().hosts["h3"].up = false;
  engine.step();
  CHECK(engine.status().phase == AdmePhase::Resolving);
  bool saw_failure = false;
  for (const auto& t : engine.status().history)
    if (t.cause.find("enactment failed") != std::string::npos) saw_failure = true;
  CHECK(saw_failure);

  // Once the probe finally reports the failure (queued through the
  // fabric's handoff queue), recovery completes.
  engine.fabric().event_queue.push_back({ProbeKind::HostFailed, "h3", 2});
  engine.step();
  CHECK(engine.status().phase == AdmePhase::Steady);
  CHECK(check_configuration(observe(engine.fabric()), engine.goal()).valid);
}

TEST_CASE("stop parks the engine") {
  Goal goal = testutil::load_randc(2);
  AdmeEngine engine(goal);
  engine.run({}, 1);
  engine.stop();
  CHECK(engine.status().phase == AdmePhase::Stopped);
  engine.run({}, 5);
  CHECK(engine.status().phase == AdmePhase::Stopped);
}

TEST_CASE("the status dump is machine-readable JSON") {
  Goal goal = testutil::load_randc(2);
  std::vector<ScenarioEvent> scenario = {{2, ScenarioEvent::Kind::FailHost, "h2"}};
  RunReport report = run(goal, scenario, 4);
  nlohmann::json doc = status_to_json(report.status);
  CHECK(doc["phase"] == "STALLED_UNSAT");
  CHECK(doc["goalRevision"] == 1);
  CHECK(doc["lastVerdict"]["valid"] == false);
  REQUIRE(doc["history"].is_array());
  REQUIRE(!doc["history"].empty());
  CHECK(doc["history"][0].contains("tick"));
  CHECK(doc["history"][0].contains("from"));
  CHECK(doc["history"][0].contains("to"));
  CHECK(doc["history"][0].contains("cause"));
}

TEST_CASE("runs are deterministic: identical logs and final configurations") {
  Goal goal = testutil::load_randc();
  std::vector<ScenarioEvent> scenario = {{3, ScenarioEvent::Kind::FailHost, "h2"},
                                         {6, ScenarioEvent::Kind::AddHost, "h7"}};
  RunReport a = run(goal, scenario, 12);
  RunReport b = run(goal, scenario, 12);
  CHECK(a.log == b.log);
  CHECK(observe(a.fabric) == observe(b.fabric));
  CHECK(a.fabric.enactment_log == b.fabric.enactment_log);
}

TEST_CASE("a budget-starved re-solve parks the engine in STALLED_UNSAT") {
  Goal goal = testutil::load_randc();
  SolveOptions opts;
  opts.node_budget = 3;
  AdmeEngine engine(goal, opts);
  engine.run({}, 2);
  CHECK(engine.status().phase == AdmePhase::StalledUnsat);
  bool saw_budget = false;
  for (const auto& t : engine.status().history)
    if (t.cause.find("BUDGET_EXHAUSTED") != std::string::npos) saw_budget = true;
  CHECK(saw_budget);
  CHECK(observe(engine.fabric()).instances.empty());
}

TEST_CASE("recovery reaches STEADY within two ticks of the last event") {
  struct Case {
    int hosts;
    std::vector<ScenarioEvent> scenario;
  };
  std::vector<Case> cases = {
      {6, {{3, ScenarioEvent::Kind::FailHost, "h6"}}},
      {6, {{3, ScenarioEvent::Kind::FailHost, "h2"}}},
      {6, {{2, ScenarioEvent::Kind::FailComponent, "Client-1"}}},
      {6,
       {{3, ScenarioEvent::Kind::FailHost, "h6"},
        {3, ScenarioEvent::Kind::AddHost, "h7"}}},
      {2,
       {{2, ScenarioEvent::Kind::FailHost, "h2"},
        {5, ScenarioEvent::Kind::AddHost, "h3"}}},
  };
  for (const auto& scenario_case : cases) {
    int64_t last_event = scenario_case.scenario.back().tick;
    std::vector<AdmePhase> phases;
    RunReport report = run(testutil::load_randc(scenario_case.hosts),
                           scenario_case.scenario, last_event + 3, {},
                           [&](const AdmeEngine& e) {
                             phases.push_back(e.status().phase);
                           });
    REQUIRE(report.status.phase == AdmePhase::Steady);
    CHECK(phases[static_cast<size_t>(last_event + 2)] == AdmePhase::Steady);
  }
}

TEST_CASE("a reloaded goal replaces constraints mid-run and is re-satisfied") {
  // Deploy nothing under a vacuous goal, then reload the real constraints.
  Goal vacuous = testutil::parse_or_die(
      "components { Router Client }\nhosts { h1, h2 }\n"
      "constraintset empty = constraintset { }\n");
  Goal strict = testutil::load_randc(2);

  AdmeEngine engine(vacuous);
  engine.schedule_goal_reload(strict, 3);
  std::vector<AdmePhase> phases;
  engine.run({}, 6, [&](const AdmeEngine& e) {
    phases.push_back(e.status().phase);
  });

  CHECK(phases[2] == AdmePhase::Steady);  // empty deployment satisfies
  CHECK(engine.solver_calls() == 1);      // reload triggered the only solve
  CHECK(engine.status().phase == AdmePhase::Steady);
  CHECK(engine.goal().revision == 1);
  CHECK(ast_equal(engine.goal().clauses, strict.clauses));
  Configuration final_config = observe(engine.fabric());
  CHECK(check_configuration(final_config, engine.goal()).valid);
  CHECK(final_config.instances.size() == 2);
}

TEST_CASE("reloading while stalled restarts the satisfy cycle") {
  Goal goal = testutil::load_randc(2);
  AdmeEngine engine(goal);
  std::vector<ScenarioEvent> scenario = {{2, ScenarioEvent::Kind::FailHost, "h2"}};
  engine.run(scenario, 4);
  REQUIRE(engine.status().phase == AdmePhase::StalledUnsat);

  // The administrator relaxes the goal: a single mutually unconstrained
  // deployment of nothing is acceptable.
  Goal relaxed = testutil::parse_or_die(
      "components { Router Client }\nhosts { h1 }\n"
      "constraintset relaxed = constraintset { }\n");
  engine.reload_goal(relaxed);
  engine.step();
  CHECK(engine.status().phase == AdmePhase::Steady);
}
