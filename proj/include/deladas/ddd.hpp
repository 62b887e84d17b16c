#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "deladas/model.hpp"

namespace deladas {

constexpr int kDddFormatVersion = 1;

// ---------------------------------------------------------------------------
// Deployment Description Documents
// ---------------------------------------------------------------------------

namespace detail {

inline std::string port_ref(const std::string& instance, const std::string& port) {
  return instance + "." + port;
}

inline std::optional<std::pair<std::string, std::string>> split_port_ref(
    const std::string& ref) {
  size_t dot = ref.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 >= ref.size())
    return std::nullopt;
  return std::make_pair(ref.substr(0, dot), ref.substr(dot + 1));
}

}  // namespace detail

/// Canonical JSON image of a configuration: instances sorted by id,
/// channels sorted by (from, to), keys sorted, 2-space indentation.
inline nlohmann::json emit_ddd_json(const Configuration& config,
                                    const Goal& goal) {
  Configuration canon = canonicalize(config);
  nlohmann::json doc;
  doc["formatVersion"] = kDddFormatVersion;
  doc["goalName"] = goal.name;
  doc["goalRevision"] = canon.goal_revision;
  doc["instances"] = nlohmann::json::array();
  for (const auto& inst : canon.instances)
    doc["instances"].push_back(
        {{"id", inst.id}, {"type", inst.type_name}, {"host", inst.host}});
  doc["channels"] = nlohmann::json::array();
  for (const auto& ch : canon.channels)
    doc["channels"].push_back(
        {{"from", detail::port_ref(ch.from_instance, ch.from_port)},
         {"to", detail::port_ref(ch.to_instance, ch.to_port)}});
  return doc;
}

inline std::string emit_ddd(const Configuration& config, const Goal& goal) {
  return emit_ddd_json(config, goal).dump(2) + "\n";
}

struct DddParseResult {
  std::optional<Configuration> configuration;
  std::string goal_name;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return configuration.has_value(); }
};

/// Strict reader for `.ddd.json` documents: rejects unsupported format
/// versions, duplicate instance ids, and channels with dangling endpoints.
inline DddParseResult parse_ddd(const std::string& text) {
  DddParseResult result;
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    result.diagnostics.push_back(error_at("malformed DDD: not a JSON object"));
    return result;
  }
  if (!doc.contains("formatVersion") || !doc["formatVersion"].is_number_integer()) {
    result.diagnostics.push_back(error_at("malformed DDD: missing formatVersion"));
    return result;
  }
  int version = doc["formatVersion"].get<int>();
  if (version != kDddFormatVersion) {
    result.diagnostics.push_back(error_at(
        "unsupported DDD formatVersion " + std::to_string(version) +
        " (expected " + std::to_string(kDddFormatVersion) + ")"));
    return result;
  }

  Configuration config;
  if (doc.contains("goalRevision") && doc["goalRevision"].is_number_integer())
    config.goal_revision = doc["goalRevision"].get<int>();
  if (doc.contains("goalName") && doc["goalName"].is_string())
    result.goal_name = doc["goalName"].get<std::string>();

  std::set<std::string> ids;
  for (const auto& entry : doc.value("instances", nlohmann::json::array())) {
    if (!entry.is_object() || !entry.contains("id") || !entry.contains("type") ||
        !entry.contains("host") || !entry["id"].is_string() ||
        !entry["type"].is_string() || !entry["host"].is_string()) {
      result.diagnostics.push_back(error_at("malformed DDD instance record"));
      return result;
    }
    ComponentInstance inst{entry["id"].get<std::string>(),
                           entry["type"].get<std::string>(),
                           entry["host"].get<std::string>()};
    if (!ids.insert(inst.id).second) {
      result.diagnostics.push_back(
          error_at("duplicate instance id '" + inst.id + "' in DDD"));
      return result;
    }
    config.instances.push_back(std::move(inst));
  }
  for (const auto& entry : doc.value("channels", nlohmann::json::array())) {
    if (!entry.is_object() || !entry.contains("from") || !entry.contains("to") ||
        !entry["from"].is_string() || !entry["to"].is_string()) {
      result.diagnostics.push_back(error_at("malformed DDD channel record"));
      return result;
    }
    auto from = detail::split_port_ref(entry["from"].get<std::string>());
    auto to = detail::split_port_ref(entry["to"].get<std::string>());
    if (!from || !to) {
      result.diagnostics.push_back(
          error_at("malformed DDD channel endpoint (expected 'instance.port')"));
      return result;
    }
    Channel ch{from->first, from->second, to->first, to->second};
    if (!ids.count(ch.from_instance) || !ids.count(ch.to_instance)) {
      result.diagnostics.push_back(error_at(
          "dangling channel endpoint '" +
          (ids.count(ch.from_instance) ? ch.to_instance : ch.from_instance) +
          "' in DDD"));
      return result;
    }
    config.channels.push_back(std::move(ch));
  }
  size_t raw_channels = config.channels.size();
  config = canonicalize(std::move(config));
  if (config.channels.size() != raw_channels) {
    result.diagnostics.push_back(error_at("duplicate channel in DDD"));
    return result;
  }
  result.configuration = std::move(config);
  return result;
}

// ---------------------------------------------------------------------------
// Configuration diffing
// ---------------------------------------------------------------------------

/// Minimal reconfiguration plan turning `from` into `to`. Instances present
/// in both (same id, type, and host) and channels joining surviving
/// instances are untouched; everything else is unwired/removed then
/// installed/instantiated/wired, in that phase order.
inline ReconfigurationPlan diff(const Configuration& from,
                                const Configuration& to) {
  Configuration a = canonicalize(from);
  Configuration b = canonicalize(to);
  ReconfigurationPlan plan;

  std::set<std::string> surviving;
  for (const auto& inst : a.instances) {
    const ComponentInstance* match = b.find_instance(inst.id);
    if (match && match->type_name == inst.type_name && match->host == inst.host)
      surviving.insert(inst.id);
  }

  auto channel_stable = [&](const Channel& ch) {
    return surviving.count(ch.from_instance) && surviving.count(ch.to_instance) &&
           a.has_channel(ch) && b.has_channel(ch);
  };

  for (const auto& ch : a.channels)
    if (!channel_stable(ch)) plan.actions.push_back(UnwireAction{ch});
  for (const auto& inst : a.instances)
    if (!surviving.count(inst.id)) plan.actions.push_back(RemoveAction{inst.id});

  std::set<std::pair<std::string, std::string>> installed;
  for (const auto& inst : a.instances)
    installed.insert({inst.type_name, inst.host});
  for (const auto& inst : b.instances) {
    if (surviving.count(inst.id)) continue;
    if (installed.insert({inst.type_name, inst.host}).second)
      plan.actions.push_back(InstallAction{inst.type_name, inst.host});
  }
  for (const auto& inst : b.instances)
    if (!surviving.count(inst.id))
      plan.actions.push_back(
          InstantiateAction{inst.id, inst.type_name, inst.host});
  for (const auto& ch : b.channels)
    if (!channel_stable(ch)) plan.actions.push_back(WireAction{ch});
  return plan;
}

/// Pure application of a plan to a configuration; mirrors the fabric's
/// action semantics without hosts. Returns the failing action's message on
/// malformed plans.
inline std::optional<std::string> apply_plan(Configuration& config,
                                             const ReconfigurationPlan& plan) {
  for (size_t i = 0; i < plan.actions.size(); ++i) {
    const Action& action = plan.actions[i];
    std::optional<std::string> failure;
    std::visit(
        [&](const auto& act) {
          using T = std::decay_t<decltype(act)>;
          if constexpr (std::is_same_v<T, InstallAction>) {
            // No configuration-level effect; installation is host state.
          } else if constexpr (std::is_same_v<T, InstantiateAction>) {
            if (config.find_instance(act.instance_id))
              failure = "duplicate instantiate of '" + act.instance_id + "'";
            else
              config.instances.push_back(
                  {act.instance_id, act.type_name, act.host});
          } else if constexpr (std::is_same_v<T, WireAction>) {
            if (!config.find_instance(act.channel.from_instance) ||
                !config.find_instance(act.channel.to_instance))
              failure = "wire references unknown instance";
            else
              config.channels.push_back(act.channel);
          } else if constexpr (std::is_same_v<T, UnwireAction>) {
            auto it = std::find(config.channels.begin(), config.channels.end(),
                                act.channel);
            if (it == config.channels.end())
              failure = "unwire of a channel that does not exist";
            else
              config.channels.erase(it);
          } else if constexpr (std::is_same_v<T, RemoveAction>) {
            auto it = std::find_if(
                config.instances.begin(), config.instances.end(),
                [&](const ComponentInstance& inst) {
                  return inst.id == act.instance_id;
                });
            if (it == config.instances.end()) {
              failure = "remove of unknown instance '" + act.instance_id + "'";
            } else {
              for (const auto& ch : config.channels)
                if (ch.from_instance == act.instance_id ||
                    ch.to_instance == act.instance_id) {
                  failure = "remove of instance '" + act.instance_id +
                            "' that still has channels";
                  return;
                }
              config.instances.erase(it);
            }
          }
        },
        action);
    if (failure)
      return "action " + std::to_string(i) + ": " + *failure;
  }
  config = canonicalize(std::move(config));
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Plan serialization (.plan.json)
// ---------------------------------------------------------------------------

inline nlohmann::json plan_to_json(const ReconfigurationPlan& plan) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& action : plan.actions) {
    std::visit(
        [&](const auto& act) {
          using T = std::decay_t<decltype(act)>;
          if constexpr (std::is_same_v<T, InstallAction>) {
            out.push_back({{"action", "install"},
                           {"type", act.type_name},
                           {"host", act.host}});
          } else if constexpr (std::is_same_v<T, InstantiateAction>) {
            out.push_back({{"action", "instantiate"},
                           {"id", act.instance_id},
                           {"type", act.type_name},
                           {"host", act.host}});
          } else if constexpr (std::is_same_v<T, WireAction>) {
            out.push_back(
                {{"action", "wire"},
                 {"from", detail::port_ref(act.channel.from_instance,
                                           act.channel.from_port)},
                 {"to", detail::port_ref(act.channel.to_instance,
                                         act.channel.to_port)}});
          } else if constexpr (std::is_same_v<T, UnwireAction>) {
            out.push_back(
                {{"action", "unwire"},
                 {"from", detail::port_ref(act.channel.from_instance,
                                           act.channel.from_port)},
                 {"to", detail::port_ref(act.channel.to_instance,
                                         act.channel.to_port)}});
          } else if constexpr (std::is_same_v<T, RemoveAction>) {
            out.push_back({{"action", "remove"}, {"id", act.instance_id}});
          }
        },
        action);
  }
  return out;
}

inline std::string plan_to_text(const ReconfigurationPlan& plan) {
  return plan_to_json(plan).dump(2) + "\n";
}

}  // namespace deladas
