#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "deladas/model.hpp"

namespace deladas {

// ---------------------------------------------------------------------------
// Simulated host fabric
// ---------------------------------------------------------------------------
//
// Enactment "scripts" are realized as deterministic per-host log lines; the
// fabric tracks installed types, running instances, and live channels. All
// mutation is serialized through the owning control thread; the event queue
// is the single handoff point from injectors to that owner.

struct SimulatedHost {
  std::string id;
  bool up = true;
  std::set<std::string> installed_types;
  std::set<std::string> running_instances;
};

struct FabricState {
  std::map<std::string, SimulatedHost> hosts;
  std::map<std::string, ComponentInstance> instances;  // running only
  std::set<Channel> live_channels;
  int64_t clock = 0;
  std::deque<ProbeEvent> event_queue;
  std::vector<std::string> enactment_log;
  int last_enacted_revision = 0;
};

/// Fresh fabric with one UP host per available goal host (failed hosts
/// start DOWN).
inline FabricState make_fabric(const Goal& goal) {
  FabricState state;
  for (const auto& h : goal.hosts) {
    SimulatedHost host;
    host.id = h.id;
    host.up = h.status == HostStatus::Available;
    state.hosts.emplace(h.id, std::move(host));
  }
  return state;
}

struct EnactmentError {
  size_t action_index = 0;
  std::string reason;
};

namespace detail {

inline std::string channel_text(const Channel& ch) {
  return ch.from_instance + "." + ch.from_port + " -> " + ch.to_instance + "." +
         ch.to_port;
}

}  // namespace detail

/// Applies the plan's actions in order, appending one script line per
/// action. Any failure rolls the whole fabric back to its pre-plan state.
inline std::optional<EnactmentError> enact(const ReconfigurationPlan& plan,
                                           FabricState& state) {
  FabricState snapshot = state;
  for (size_t i = 0; i < plan.actions.size(); ++i) {
    std::optional<std::string> failure;
    std::visit(
        [&](const auto& act) {
          using T = std::decay_t<decltype(act)>;
          if constexpr (std::is_same_v<T, InstallAction>) {
            auto it = state.hosts.find(act.host);
            if (it == state.hosts.end() || !it->second.up) {
              failure = "install on unknown or down host '" + act.host + "'";
              return;
            }
            it->second.installed_types.insert(act.type_name);
            state.enactment_log.push_back(act.host + ": install " + act.type_name);
          } else if constexpr (std::is_same_v<T, InstantiateAction>) {
            auto it = state.hosts.find(act.host);
            if (it == state.hosts.end() || !it->second.up) {
              failure = "instantiate on unknown or down host '" + act.host + "'";
              return;
            }
            if (!it->second.installed_types.count(act.type_name)) {
              failure = "instantiate of '" + act.type_name +
                        "' before install on host '" + act.host + "'";
              return;
            }
            if (state.instances.count(act.instance_id)) {
              failure = "duplicate instantiate of '" + act.instance_id + "'";
              return;
            }
            it->second.running_instances.insert(act.instance_id);
            state.instances.emplace(
                act.instance_id,
                ComponentInstance{act.instance_id, act.type_name, act.host});
            state.enactment_log.push_back(act.host + ": instantiate " +
                                          act.instance_id);
          } else if constexpr (std::is_same_v<T, WireAction>) {
            if (!state.instances.count(act.channel.from_instance) ||
                !state.instances.count(act.channel.to_instance)) {
              failure = "wire references an instance that is not running";
              return;
            }
            state.live_channels.insert(act.channel);
            state.enactment_log.push_back("wire " +
                                          detail::channel_text(act.channel));
          } else if constexpr (std::is_same_v<T, UnwireAction>) {
            if (!state.live_channels.erase(act.channel)) {
              failure = "unwire of a channel that is not live";
              return;
            }
            state.enactment_log.push_back("unwire " +
                                          detail::channel_text(act.channel));
          } else if constexpr (std::is_same_v<T, RemoveAction>) {
            auto it = state.instances.find(act.instance_id);
            if (it == state.instances.end()) {
              failure = "remove of unknown instance '" + act.instance_id + "'";
              return;
            }
            for (const auto& ch : state.live_channels)
              if (ch.from_instance == act.instance_id ||
                  ch.to_instance == act.instance_id) {
                failure = "remove of instance '" + act.instance_id +
                          "' that is still wired";
                return;
              }
            state.hosts[it->second.host].running_instances.erase(act.instance_id);
            state.enactment_log.push_back(it->second.host + ": remove " +
                                          act.instance_id);
            state.instances.erase(it);
          }
        },
        plan.actions[i]);
    if (failure) {
      state = std::move(snapshot);
      return EnactmentError{i, *failure};
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Fault injection and probes
// ---------------------------------------------------------------------------

struct ScenarioEvent {
  enum class Kind { FailHost, AddHost, FailComponent };
  int64_t tick = 0;
  Kind kind = Kind::FailHost;
  std::string subject;
};

inline const char* to_string(ScenarioEvent::Kind k) {
  switch (k) {
    case ScenarioEvent::Kind::FailHost: return "fail_host";
    case ScenarioEvent::Kind::AddHost: return "add_host";
    case ScenarioEvent::Kind::FailComponent: return "fail_component";
  }
  return "?";
}

/// Applies one perturbation and queues exactly one matching probe event.
/// Unknown subjects are rejected and leave the state untouched.
inline std::optional<Diagnostic> inject(const ScenarioEvent& event,
                                        FabricState& state) {
  switch (event.kind) {
    case ScenarioEvent::Kind::FailHost: {
      auto it = state.hosts.find(event.subject);
      if (it == state.hosts.end() || !it->second.up)
        return error_at("fail_host: unknown or already failed host '" +
                        event.subject + "'");
      it->second.up = false;
      for (const auto& id : it->second.running_instances)
        state.instances.erase(id);
      std::set<std::string> dead;
      std::swap(dead, it->second.running_instances);
      for (auto ch = state.live_channels.begin();
           ch != state.live_channels.end();) {
        if (dead.count(ch->from_instance) || dead.count(ch->to_instance))
          ch = state.live_channels.erase(ch);
        else
          ++ch;
      }
      state.event_queue.push_back(
          {ProbeKind::HostFailed, event.subject, state.clock});
      return std::nullopt;
    }
    case ScenarioEvent::Kind::AddHost: {
      if (state.hosts.count(event.subject))
        return error_at("add_host: host '" + event.subject + "' already exists");
      SimulatedHost host;
      host.id = event.subject;
      state.hosts.emplace(event.subject, std::move(host));
      state.event_queue.push_back(
          {ProbeKind::HostAdded, event.subject, state.clock});
      return std::nullopt;
    }
    case ScenarioEvent::Kind::FailComponent: {
      auto it = state.instances.find(event.subject);
      if (it == state.instances.end())
        return error_at("fail_component: unknown instance '" + event.subject +
                        "'");
      state.hosts[it->second.host].running_instances.erase(event.subject);
      state.instances.erase(it);
      for (auto ch = state.live_channels.begin();
           ch != state.live_channels.end();) {
        if (ch->from_instance == event.subject ||
            ch->to_instance == event.subject)
          ch = state.live_channels.erase(ch);
        else
          ++ch;
      }
      state.event_queue.push_back(
          {ProbeKind::ComponentFailed, event.subject, state.clock});
      return std::nullopt;
    }
  }
  return std::nullopt;
}

/// Topology-level probe: the configuration currently running on UP hosts.
inline Configuration observe(const FabricState& state) {
  Configuration config;
  for (const auto& [id, inst] : state.instances) {
    auto host = state.hosts.find(inst.host);
    if (host != state.hosts.end() && host->second.up)
      config.instances.push_back(inst);
  }
  for (const auto& ch : state.live_channels) config.channels.push_back(ch);
  config.goal_revision = state.last_enacted_revision;
  return canonicalize(std::move(config));
}

/// Drains queued probe events in emission order.
inline std::vector<ProbeEvent> poll_events(FabricState& state) {
  std::vector<ProbeEvent> events(state.event_queue.begin(),
                                 state.event_queue.end());
  state.event_queue.clear();
  return events;
}

// ---------------------------------------------------------------------------
// Scenario files (.scenario.json)
// ---------------------------------------------------------------------------

struct ScenarioParseResult {
  std::vector<ScenarioEvent> events;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return !has_errors(diagnostics); }
};

inline ScenarioParseResult parse_scenario(const std::string& text) {
  ScenarioParseResult result;
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) {
    result.diagnostics.push_back(
        error_at("malformed scenario: expected a JSON array"));
    return result;
  }
  int64_t last_tick = 0;
  for (const auto& entry : doc) {
    if (!entry.is_object() || !entry.contains("tick") ||
        !entry.contains("action") || !entry.contains("subject") ||
        !entry["tick"].is_number_integer() || !entry["action"].is_string() ||
        !entry["subject"].is_string()) {
      result.diagnostics.push_back(error_at(
          "malformed scenario event: expected {tick, action, subject}"));
      return result;
    }
    ScenarioEvent event;
    event.tick = entry["tick"].get<int64_t>();
    event.subject = entry["subject"].get<std::string>();
    std::string action = entry["action"].get<std::string>();
    if (action == "fail_host") {
      event.kind = ScenarioEvent::Kind::FailHost;
    } else if (action == "add_host") {
      event.kind = ScenarioEvent::Kind::AddHost;
    } else if (action == "fail_component") {
      event.kind = ScenarioEvent::Kind::FailComponent;
    } else {
      result.diagnostics.push_back(
          error_at("unknown scenario action '" + action + "'"));
      return result;
    }
    if (event.tick < last_tick) {
      result.diagnostics.push_back(error_at(
          "scenario ticks must be nondecreasing (saw " +
          std::to_string(event.tick) + " after " + std::to_string(last_tick) +
          ")"));
      return result;
    }
    last_tick = event.tick;
    result.events.push_back(std::move(event));
  }
  return result;
}

inline std::string scenario_to_text(const std::vector<ScenarioEvent>& events) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& e : events)
    doc.push_back({{"tick", e.tick},
                   {"action", to_string(e.kind)},
                   {"subject", e.subject}});
  return doc.dump(2) + "\n";
}

}  // namespace deladas
