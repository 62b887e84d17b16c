#include <doctest.h>

#include <string>

#include "deladas/ddd.hpp"
#include "deladas/fabric.hpp"
#include "deladas/solver.hpp"
#include "test_util.hpp"

using namespace deladas;

namespace {

FabricState deployed_randc6(const Goal& goal) {
  FabricState state = make_fabric(goal);
  ReconfigurationPlan plan = diff(Configuration{}, testutil::classic_randc6());
  REQUIRE(!enact(plan, state).has_value());
  return state;
}

}  // namespace

TEST_CASE("cold-start enactment of the 2-router plan") {
  Goal goal = testutil::load_randc(2);
  SolveResult solved = solve(goal);
  REQUIRE(solved.status == SolveStatus::Sat);
  const Configuration& target = solved.solutions[0];

  FabricState state = make_fabric(goal);
  ReconfigurationPlan plan = diff(Configuration{}, target);
  auto failure = enact(plan, state);
  CHECK(!failure.has_value());
  CHECK(state.instances.size() == 2);
  CHECK(state.live_channels.size() == 2);
  REQUIRE(state.enactment_log.size() == 6);
  CHECK(state.enactment_log[0] == "h1: install Router");
  CHECK(state.enactment_log[2] == "h1: instantiate Router-1");
  CHECK(state.enactment_log[4].rfind("wire ", 0) == 0);
  CHECK(observe(state) == target);
}

TEST_CASE("an empty plan leaves the fabric unchanged") {
  Goal goal = testutil::load_randc();
  FabricState state = deployed_randc6(goal);
  FabricState before = state;
  CHECK(!enact(ReconfigurationPlan{}, state).has_value());
  CHECK(observe(state) == observe(before));
  CHECK(state.enactment_log.size() == before.enactment_log.size());
}

TEST_CASE("enactment on a down host fails atomically") {
  Goal goal = testutil::load_randc(2);
  FabricState state = make_fabric(goal);
  state.hosts["h2"].up = false;

  ReconfigurationPlan plan = diff(Configuration{}, testutil::classic_randc6());
  Configuration before = observe(state);
  size_t log_before = state.enactment_log.size();
  auto failure = enact(plan, state);
  REQUIRE(failure.has_value());
  CHECK(failure->reason.find("down host") != std::string::npos);
  CHECK(observe(state) == before);
  CHECK(state.enactment_log.size() == log_before);  // rollback drops the log too
}

TEST_CASE("instantiate before install and duplicate instantiate are errors") {
  Goal goal = testutil::load_randc(2);
  FabricState state = make_fabric(goal);

  ReconfigurationPlan missing_install;
  missing_install.actions = {InstantiateAction{"Router-1", "Router", "h1"}};
  auto failure = enact(missing_install, state);
  REQUIRE(failure.has_value());
  CHECK(failure->reason.find("before install") != std::string::npos);

  ReconfigurationPlan twice;
  twice.actions = {InstallAction{"Router", "h1"},
                   InstantiateAction{"Router-1", "Router", "h1"},
                   InstantiateAction{"Router-1", "Router", "h1"}};
  failure = enact(twice, state);
  REQUIRE(failure.has_value());
  CHECK(failure->action_index == 2);
  CHECK(failure->reason.find("duplicate instantiate") != std::string::npos);
  CHECK(observe(state).instances.empty());  // rolled back
}

TEST_CASE("failing a host drops its instances, channels, and queues a probe") {
  Goal goal = testutil::load_randc();
  FabricState state = deployed_randc6(goal);
  state.clock = 3;

  auto rejected = inject({3, ScenarioEvent::Kind::FailHost, "h6"}, state);
  CHECK(!rejected.has_value());
  CHECK(!state.hosts["h6"].up);

  Configuration observed = observe(state);
  CHECK(observed.instances.size() == 5);
  CHECK(observed.find_instance("Client-4") == nullptr);
  CHECK(observed.channels.size() == 8);

  auto events = poll_events(state);
  REQUIRE(events.size() == 1);
  CHECK(events[0].kind == ProbeKind::HostFailed);
  CHECK(events[0].subject == "h6");
  CHECK(events[0].timestamp == 3);
  CHECK(poll_events(state).empty());
}

TEST_CASE("adding a host and failing a component") {
  Goal goal = testutil::load_randc();
  FabricState state = deployed_randc6(goal);

  CHECK(!inject({0, ScenarioEvent::Kind::AddHost, "h7"}, state).has_value());
  CHECK(state.hosts.count("h7") == 1);
  CHECK(state.hosts["h7"].up);
  CHECK(inject({0, ScenarioEvent::Kind::AddHost, "h7"}, state).has_value());

  CHECK(!inject({0, ScenarioEvent::Kind::FailComponent, "Client-1"}, state)
             .has_value());
  CHECK(observe(state).find_instance("Client-1") == nullptr);
  // Already removed: rejected, and no event queued for the rejection.
  CHECK(inject({0, ScenarioEvent::Kind::FailComponent, "Client-1"}, state)
            .has_value());

  auto events = poll_events(state);
  REQUIRE(events.size() == 2);
  CHECK(events[0].kind == ProbeKind::HostAdded);
  CHECK(events[1].kind == ProbeKind::ComponentFailed);
}

TEST_CASE("events drain in FIFO order with their injection ticks") {
  Goal goal = testutil::load_randc();
  FabricState state = deployed_randc6(goal);
  state.clock = 3;
  REQUIRE(!inject({3, ScenarioEvent::Kind::FailHost, "h5"}, state).has_value());
  state.clock = 5;
  REQUIRE(!inject({5, ScenarioEvent::Kind::AddHost, "h9"}, state).has_value());
  auto events = poll_events(state);
  REQUIRE(events.size() == 2);
  CHECK(events[0].timestamp == 3);
  CHECK(events[1].timestamp == 5);
  CHECK(events[0].kind == ProbeKind::HostFailed);
  CHECK(events[1].kind == ProbeKind::HostAdded);
}

TEST_CASE("observe on a fresh fabric is the empty configuration") {
  Goal goal = testutil::load_randc();
  FabricState state = make_fabric(goal);
  Configuration observed = observe(state);
  CHECK(observed.instances.empty());
  CHECK(observed.channels.empty());
}

TEST_CASE("property: enactment fidelity on random configuration pairs") {
  Goal goal = testutil::load_randc();
  testutil::TestRng rng(4242);
  for (int trial = 0; trial < 100; ++trial) {
    Configuration from = testutil::random_configuration(goal, rng);
    Configuration to = testutil::random_configuration(goal, rng);

    FabricState state = make_fabric(goal);
    REQUIRE(!enact(diff(Configuration{}, from), state).has_value());
    CHECK(observe(state) == from);
    REQUIRE(!enact(diff(from, to), state).has_value());
    CHECK(observe(state) == to);
  }
}

TEST_CASE("scenario files parse, validate tick order, and round-trip") {
  std::string text = testutil::read_file_or_die(testutil::examples_dir() +
                                                "/fail-h2-add-h3.scenario.json");
  ScenarioParseResult parsed = parse_scenario(text);
  REQUIRE(parsed.ok());
  REQUIRE(parsed.events.size() == 2);
  CHECK(parsed.events[0].kind == ScenarioEvent::Kind::FailHost);
  CHECK(parsed.events[0].tick == 2);
  CHECK(parsed.events[1].kind == ScenarioEvent::Kind::AddHost);
  CHECK(parsed.events[1].subject == "h3");

  ScenarioParseResult reparsed = parse_scenario(scenario_to_text(parsed.events));
  REQUIRE(reparsed.ok());
  CHECK(reparsed.events.size() == 2);

  CHECK(!parse_scenario("{\"not\": \"an array\"}").ok());
  CHECK(!parse_scenario(
             R"([{"tick": 5, "action": "fail_host", "subject": "h1"},
                 {"tick": 2, "action": "fail_host", "subject": "h2"}])")
             .ok());
  CHECK(!parse_scenario(R"([{"tick": 1, "action": "melt", "subject": "h1"}])")
             .ok());
}
