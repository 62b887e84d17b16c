#include <doctest.h>

#include "deladas/model.hpp"
#include "deladas/parser.hpp"
#include "test_util.hpp"

using namespace deladas;

TEST_CASE("validate_goal accepts the randc goal") {
  Goal goal = testutil::load_randc();
  CHECK(validate_goal(goal).empty());
}

TEST_CASE("validate_goal flags unbound variables") {
  Goal goal = testutil::load_randc();
  ConstraintExpr bad;
  bad.node = Reachable{"zz", "zz"};
  goal.clauses.push_back(bad);
  auto diags = validate_goal(goal);
  REQUIRE(!diags.empty());
  CHECK(diags[0].message.find("unbound") != std::string::npos);
}

TEST_CASE("validate_goal flags duplicate names") {
  Goal goal;
  goal.component_types.push_back({"Router", {}});
  goal.component_types.push_back({"Router", {}});
  goal.hosts.push_back({"h1", HostStatus::Available});
  goal.hosts.push_back({"h1", HostStatus::Available});
  auto diags = validate_goal(goal);
  int dup = 0;
  for (const auto& d : diags)
    if (d.message.find("duplicate") != std::string::npos) ++dup;
  CHECK(dup == 2);
}

TEST_CASE("canonicalize sorts instances and channels and drops duplicates") {
  Configuration config;
  config.instances = {{"b", "T", "h1"}, {"a", "T", "h1"}};
  config.channels = {{"b", "out", "a", "in"},
                     {"a", "out", "b", "in"},
                     {"a", "out", "b", "in"}};
  Configuration canon = canonicalize(config);
  CHECK(canon.instances[0].id == "a");
  CHECK(canon.channels.size() == 2);
  CHECK(canon.channels[0].from_instance == "a");
}

TEST_CASE("validate_configuration enforces referential integrity") {
  Goal goal = testutil::load_randc();

  Configuration dangling;
  dangling.instances = {{"Router-1", "Router", "h1"}};
  dangling.channels = {{"Router-1", "rou", "Router-9", "rin"}};
  CHECK(has_errors(validate_configuration(dangling, goal)));

  Configuration unknown_host;
  unknown_host.instances = {{"Router-1", "Router", "h99"}};
  CHECK(has_errors(validate_configuration(unknown_host, goal)));

  Configuration bad_direction;
  bad_direction.instances = {{"Router-1", "Router", "h1"},
                             {"Router-2", "Router", "h2"}};
  bad_direction.channels = {{"Router-1", "rin", "Router-2", "rou"}};
  CHECK(has_errors(validate_configuration(bad_direction, goal)));

  Configuration on_failed_host;
  on_failed_host.instances = {{"Router-1", "Router", "h1"}};
  CHECK(validate_configuration(on_failed_host, goal).empty());
  for (auto& h : goal.hosts)
    if (h.id == "h1") h.status = HostStatus::Failed;
  CHECK(has_errors(validate_configuration(on_failed_host, goal)));
}
