#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "deladas/diagnostics.hpp"

namespace deladas {

// ---------------------------------------------------------------------------
// Resources
// ---------------------------------------------------------------------------

enum class PortDirection { In, Out };

inline const char* to_string(PortDirection d) {
  return d == PortDirection::In ? "in" : "out";
}

struct PortSpec {
  std::string name;
  PortDirection direction = PortDirection::In;

  friend bool operator==(const PortSpec&, const PortSpec&) = default;
};

struct ComponentType {
  std::string name;
  std::vector<PortSpec> ports;  // kept sorted by name (canonical form)

  const PortSpec* find_port(const std::string& port) const {
    for (const auto& p : ports)
      if (p.name == port) return &p;
    return nullptr;
  }

  friend bool operator==(const ComponentType&, const ComponentType&) = default;
};

enum class HostStatus { Available, Failed };

struct HostDescriptor {
  std::string id;
  HostStatus status = HostStatus::Available;

  friend bool operator==(const HostDescriptor&, const HostDescriptor&) = default;
};

// ---------------------------------------------------------------------------
// Constraint AST
// ---------------------------------------------------------------------------

enum class CompareOp { Eq, Ne, Le, Lt, Ge, Gt };

inline const char* to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "!=";
    case CompareOp::Le: return "<=";
    case CompareOp::Lt: return "<";
    case CompareOp::Ge: return ">=";
    case CompareOp::Gt: return ">";
  }
  return "?";
}

/// Integer-valued expression inside a comparison atom.
///   Literal        — an integer constant
///   CardInstances  — card(instancesof <type> in <hostVar|deployment>)
///   CardConnected  — card(<Type> <var> connectsto <targetVar>)
struct IntExpr {
  enum class Kind { Literal, CardInstances, CardConnected };
  Kind kind = Kind::Literal;
  int literal = 0;
  std::string type_name;   // CardInstances / CardConnected
  std::string scope_ref;   // CardInstances: host variable or "deployment"
  std::string count_var;   // CardConnected: the locally bound instance variable
  std::string target_var;  // CardConnected: the instance it must touch
  int line = 0, col = 0;

  bool equals(const IntExpr& o) const {
    return kind == o.kind && literal == o.literal && type_name == o.type_name &&
           scope_ref == o.scope_ref && count_var == o.count_var &&
           target_var == o.target_var;
  }
};

struct ConstraintExpr;

enum class DomainKind { Host, Instance };

/// forall/exists <domain> ( body... ); the body is an implicit conjunction.
struct Quantifier {
  bool universal = true;
  DomainKind domain = DomainKind::Host;
  std::string type_name;            // Instance domains only
  std::string domain_ref;           // "deployment" or an enclosing host variable
  std::vector<std::string> vars;    // one or more, same domain
  std::vector<ConstraintExpr> body;
};

struct Conjunction {
  std::vector<ConstraintExpr> terms;
};

struct Disjunction {
  std::vector<ConstraintExpr> terms;
};

struct Negation {
  std::vector<ConstraintExpr> term;  // exactly one
};

struct Compare {
  IntExpr lhs;
  CompareOp op = CompareOp::Eq;
  IntExpr rhs;
};

/// <varA>.<portA> connectsto <varB>.<portB>. Direction-agnostic in the
/// source language; the directed channel is resolved from port directions.
struct ConnectsTo {
  std::string var_a, port_a;
  std::string var_b, port_b;
};

struct Reachable {
  std::string var_a, var_b;
};

struct NotEqualVars {
  std::string var_a, var_b;
};

struct ConstraintExpr {
  std::variant<Quantifier, Conjunction, Disjunction, Negation, Compare,
               ConnectsTo, Reachable, NotEqualVars>
      node;
  int line = 0, col = 0;
};

// Structural equality, ignoring source positions.
inline bool ast_equal(const ConstraintExpr& a, const ConstraintExpr& b);

inline bool ast_equal(const std::vector<ConstraintExpr>& a,
                      const std::vector<ConstraintExpr>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!ast_equal(a[i], b[i])) return false;
  return true;
}

inline bool ast_equal(const ConstraintExpr& a, const ConstraintExpr& b) {
  if (a.node.index() != b.node.index()) return false;
  struct Vis {
    const ConstraintExpr& other;
    bool operator()(const Quantifier& q) const {
      const auto& o = std::get<Quantifier>(other.node);
      return q.universal == o.universal && q.domain == o.domain &&
             q.type_name == o.type_name && q.domain_ref == o.domain_ref &&
             q.vars == o.vars && ast_equal(q.body, o.body);
    }
    bool operator()(const Conjunction& c) const {
      return ast_equal(c.terms, std::get<Conjunction>(other.node).terms);
    }
    bool operator()(const Disjunction& c) const {
      return ast_equal(c.terms, std::get<Disjunction>(other.node).terms);
    }
    bool operator()(const Negation& n) const {
      return ast_equal(n.term, std::get<Negation>(other.node).term);
    }
    bool operator()(const Compare& c) const {
      const auto& o = std::get<Compare>(other.node);
      return c.op == o.op && c.lhs.equals(o.lhs) && c.rhs.equals(o.rhs);
    }
    bool operator()(const ConnectsTo& c) const {
      const auto& o = std::get<ConnectsTo>(other.node);
      return c.var_a == o.var_a && c.port_a == o.port_a && c.var_b == o.var_b &&
             c.port_b == o.port_b;
    }
    bool operator()(const Reachable& r) const {
      const auto& o = std::get<Reachable>(other.node);
      return r.var_a == o.var_a && r.var_b == o.var_b;
    }
    bool operator()(const NotEqualVars& n) const {
      const auto& o = std::get<NotEqualVars>(other.node);
      return n.var_a == o.var_a && n.var_b == o.var_b;
    }
  };
  return std::visit(Vis{b}, a.node);
}

// ---------------------------------------------------------------------------
// Goal
// ---------------------------------------------------------------------------

struct Goal {
  std::string name;  // the constraintset name
  std::vector<ComponentType> component_types;
  std::vector<HostDescriptor> hosts;
  std::vector<ConstraintExpr> clauses;  // top-level conjuncts, source order
  int revision = 0;

  const ComponentType* find_type(const std::string& type) const {
    for (const auto& t : component_types)
      if (t.name == type) return &t;
    return nullptr;
  }

  const HostDescriptor* find_host(const std::string& id) const {
    for (const auto& h : hosts)
      if (h.id == id) return &h;
    return nullptr;
  }

  std::vector<std::string> available_hosts() const {
    std::vector<std::string> out;
    for (const auto& h : hosts)
      if (h.status == HostStatus::Available) out.push_back(h.id);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::optional<PortDirection> port_direction(const std::string& type,
                                              const std::string& port) const {
    if (const ComponentType* t = find_type(type))
      if (const PortSpec* p = t->find_port(port)) return p->direction;
    return std::nullopt;
  }
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ComponentInstance {
  std::string id;
  std::string type_name;
  std::string host;

  friend bool operator==(const ComponentInstance&, const ComponentInstance&) = default;
  friend auto operator<=>(const ComponentInstance&, const ComponentInstance&) = default;
};

struct Channel {
  std::string from_instance;
  std::string from_port;
  std::string to_instance;
  std::string to_port;

  friend bool operator==(const Channel&, const Channel&) = default;
  friend auto operator<=>(const Channel&, const Channel&) = default;
};

struct Configuration {
  std::vector<ComponentInstance> instances;  // canonical: sorted by id
  std::vector<Channel> channels;             // canonical: sorted
  int goal_revision = 0;

  const ComponentInstance* find_instance(const std::string& id) const {
    for (const auto& i : instances)
      if (i.id == id) return &i;
    return nullptr;
  }

  bool has_channel(const Channel& c) const {
    return std::binary_search(channels.begin(), channels.end(), c);
  }

  friend bool operator==(const Configuration&, const Configuration&) = default;
};

/// Sorts instances by id and channels by (from, port, to, port), dropping
/// duplicate channels. All public entry points hand configurations around in
/// this form so equality is structural.
inline Configuration canonicalize(Configuration config) {
  std::sort(config.instances.begin(), config.instances.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(config.channels.begin(), config.channels.end());
  config.channels.erase(
      std::unique(config.channels.begin(), config.channels.end()),
      config.channels.end());
  return config;
}

// ---------------------------------------------------------------------------
// Reconfiguration plans
// ---------------------------------------------------------------------------

struct InstallAction {
  std::string type_name;
  std::string host;
  friend bool operator==(const InstallAction&, const InstallAction&) = default;
};

struct InstantiateAction {
  std::string instance_id;
  std::string type_name;
  std::string host;
  friend bool operator==(const InstantiateAction&, const InstantiateAction&) = default;
};

struct WireAction {
  Channel channel;
  friend bool operator==(const WireAction&, const WireAction&) = default;
};

struct UnwireAction {
  Channel channel;
  friend bool operator==(const UnwireAction&, const UnwireAction&) = default;
};

struct RemoveAction {
  std::string instance_id;
  friend bool operator==(const RemoveAction&, const RemoveAction&) = default;
};

using Action = std::variant<InstallAction, InstantiateAction, WireAction,
                            UnwireAction, RemoveAction>;

struct ReconfigurationPlan {
  std::vector<Action> actions;

  bool empty() const { return actions.empty(); }
  size_t size() const { return actions.size(); }

  friend bool operator==(const ReconfigurationPlan&, const ReconfigurationPlan&) = default;
};

// ---------------------------------------------------------------------------
// Probe events
// ---------------------------------------------------------------------------

enum class ProbeKind { HostFailed, ComponentFailed, HostAdded };

inline const char* to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::HostFailed: return "HOST_FAILED";
    case ProbeKind::ComponentFailed: return "COMPONENT_FAILED";
    case ProbeKind::HostAdded: return "HOST_ADDED";
  }
  return "?";
}

struct ProbeEvent {
  ProbeKind kind = ProbeKind::HostFailed;
  std::string subject;  // host id or instance id
  int64_t timestamp = 0;  // logical tick

  friend bool operator==(const ProbeEvent&, const ProbeEvent&) = default;
};

// ---------------------------------------------------------------------------
// Goal validation
// ---------------------------------------------------------------------------

namespace detail {

struct ScopeEntry {
  std::string var;
  DomainKind kind;
  std::string type_name;  // Instance entries
};

inline const ScopeEntry* scope_find(const std::vector<ScopeEntry>& scope,
                                    const std::string& var) {
  for (auto it = scope.rbegin(); it != scope.rend(); ++it)
    if (it->var == var) return &*it;
  return nullptr;
}

inline void validate_int_expr(const IntExpr& e, const Goal& goal,
                              std::vector<ScopeEntry>& scope,
                              std::vector<Diagnostic>& out) {
  if (e.kind == IntExpr::Kind::CardInstances) {
    if (!goal.find_type(e.type_name))
      out.push_back(error_at("unknown component type '" + e.type_name + "'",
                             e.line, e.col));
    if (e.scope_ref != "deployment") {
      const ScopeEntry* s = scope_find(scope, e.scope_ref);
      if (!s)
        out.push_back(error_at("unbound variable '" + e.scope_ref + "'",
                               e.line, e.col));
      else if (s->kind != DomainKind::Host)
        out.push_back(error_at("'" + e.scope_ref +
                                   "' must be a host variable in instancesof",
                               e.line, e.col));
    }
  } else if (e.kind == IntExpr::Kind::CardConnected) {
    if (!goal.find_type(e.type_name))
      out.push_back(error_at("unknown component type '" + e.type_name + "'",
                             e.line, e.col));
    const ScopeEntry* t = scope_find(scope, e.target_var);
    if (!t)
      out.push_back(error_at("unbound variable '" + e.target_var + "'", e.line,
                             e.col));
    else if (t->kind != DomainKind::Instance)
      out.push_back(error_at("'" + e.target_var +
                                 "' must be an instance variable in connectsto",
                             e.line, e.col));
  }
}

inline void validate_expr(const ConstraintExpr& expr, const Goal& goal,
                          std::vector<ScopeEntry>& scope,
                          std::vector<Diagnostic>& out) {
  auto require_instance_var = [&](const std::string& var, int line, int col)
      -> const ScopeEntry* {
    const ScopeEntry* s = scope_find(scope, var);
    if (!s) {
      out.push_back(error_at("unbound variable '" + var + "'", line, col));
      return nullptr;
    }
    if (s->kind != DomainKind::Instance) {
      out.push_back(
          error_at("'" + var + "' must be an instance variable", line, col));
      return nullptr;
    }
    return s;
  };

  struct Vis {
    const ConstraintExpr& expr;
    const Goal& goal;
    std::vector<ScopeEntry>& scope;
    std::vector<Diagnostic>& out;
    decltype(require_instance_var)& inst_var;

    void operator()(const Quantifier& q) const {
      if (q.domain == DomainKind::Instance && !goal.find_type(q.type_name))
        out.push_back(error_at("unknown component type '" + q.type_name + "'",
                               expr.line, expr.col));
      if (q.domain_ref != "deployment") {
        const ScopeEntry* s = scope_find(scope, q.domain_ref);
        if (!s)
          out.push_back(error_at("unbound variable '" + q.domain_ref + "'",
                                 expr.line, expr.col));
        else if (s->kind != DomainKind::Host)
          out.push_back(error_at("quantifier domain '" + q.domain_ref +
                                     "' must be a host variable",
                                 expr.line, expr.col));
        if (q.domain == DomainKind::Host)
          out.push_back(error_at("host quantifier domain must be deployment",
                                 expr.line, expr.col));
      }
      size_t depth = scope.size();
      for (const auto& v : q.vars) {
        if (scope_find(scope, v))
          out.push_back(warning_at(
              "variable '" + v + "' shadows an enclosing binding", expr.line,
              expr.col));
        scope.push_back({v, q.domain, q.type_name});
      }
      for (const auto& term : q.body) validate_expr(term, goal, scope, out);
      scope.resize(depth);
    }
    void operator()(const Conjunction& c) const {
      for (const auto& t : c.terms) validate_expr(t, goal, scope, out);
    }
    void operator()(const Disjunction& d) const {
      for (const auto& t : d.terms) validate_expr(t, goal, scope, out);
    }
    void operator()(const Negation& n) const {
      for (const auto& t : n.term) validate_expr(t, goal, scope, out);
    }
    void operator()(const Compare& c) const {
      validate_int_expr(c.lhs, goal, scope, out);
      validate_int_expr(c.rhs, goal, scope, out);
    }
    void operator()(const ConnectsTo& c) const {
      const ScopeEntry* a = inst_var(c.var_a, expr.line, expr.col);
      const ScopeEntry* b = inst_var(c.var_b, expr.line, expr.col);
      if (!a || !b) return;
      auto da = goal.port_direction(a->type_name, c.port_a);
      auto db = goal.port_direction(b->type_name, c.port_b);
      if (!da)
        out.push_back(error_at("component type '" + a->type_name +
                                   "' has no port '" + c.port_a + "'",
                               expr.line, expr.col));
      if (!db)
        out.push_back(error_at("component type '" + b->type_name +
                                   "' has no port '" + c.port_b + "'",
                               expr.line, expr.col));
      if (da && db && *da == *db)
        out.push_back(error_at(
            "direction mismatch: '" + a->type_name + "." + c.port_a + "' and '" +
                b->type_name + "." + c.port_b + "' are both '" +
                to_string(*da) + "'; connectsto joins an out port to an in port",
            expr.line, expr.col));
    }
    void operator()(const Reachable& r) const {
      const ScopeEntry* a = inst_var(r.var_a, expr.line, expr.col);
      const ScopeEntry* b = inst_var(r.var_b, expr.line, expr.col);
      if (a && b && a->type_name != b->type_name)
        out.push_back(error_at(
            "reachable requires both variables to range over the same "
            "component type",
            expr.line, expr.col));
    }
    void operator()(const NotEqualVars& n) const {
      const ScopeEntry* a = scope_find(scope, n.var_a);
      const ScopeEntry* b = scope_find(scope, n.var_b);
      if (!a)
        out.push_back(
            error_at("unbound variable '" + n.var_a + "'", expr.line, expr.col));
      if (!b)
        out.push_back(
            error_at("unbound variable '" + n.var_b + "'", expr.line, expr.col));
      if (a && b && a->kind != b->kind)
        out.push_back(error_at("cannot compare a host variable with an "
                               "instance variable",
                               expr.line, expr.col));
    }
  };
  std::visit(Vis{expr, goal, scope, out, require_instance_var}, expr.node);
}

}  // namespace detail

/// Checks name resolution, variable binding, and port-direction consistency
/// of every constraint. Returns one diagnostic per defect; an empty list
/// means the goal is solvable as written.
inline std::vector<Diagnostic> validate_goal(const Goal& goal) {
  std::vector<Diagnostic> out;

  std::set<std::string> type_names;
  for (const auto& t : goal.component_types) {
    if (!type_names.insert(t.name).second)
      out.push_back(error_at("duplicate component type '" + t.name + "'"));
    std::set<std::string> port_names;
    for (const auto& p : t.ports)
      if (!port_names.insert(p.name).second)
        out.push_back(error_at("duplicate port '" + p.name + "' on component type '" +
                               t.name + "'"));
  }
  std::set<std::string> host_ids;
  for (const auto& h : goal.hosts)
    if (!host_ids.insert(h.id).second)
      out.push_back(error_at("duplicate host '" + h.id + "'"));

  std::vector<detail::ScopeEntry> scope;
  for (const auto& clause : goal.clauses)
    detail::validate_expr(clause, goal, scope, out);
  return out;
}

/// Structural and referential checks of a configuration against a goal:
/// distinct instance ids, known types and hosts, hosts available, channel
/// endpoints resolving to ports with the right directions, no duplicates.
inline std::vector<Diagnostic> validate_configuration(const Configuration& config,
                                                      const Goal& goal) {
  std::vector<Diagnostic> out;
  std::set<std::string> ids;
  for (const auto& inst : config.instances) {
    if (!ids.insert(inst.id).second)
      out.push_back(error_at("duplicate instance id '" + inst.id + "'"));
    if (!goal.find_type(inst.type_name))
      out.push_back(error_at("instance '" + inst.id + "' has unknown type '" +
                             inst.type_name + "'"));
    const HostDescriptor* h = goal.find_host(inst.host);
    if (!h)
      out.push_back(error_at("instance '" + inst.id + "' placed on unknown host '" +
                             inst.host + "'"));
    else if (h->status != HostStatus::Available)
      out.push_back(error_at("instance '" + inst.id + "' placed on failed host '" +
                             inst.host + "'"));
  }
  std::set<Channel> seen;
  for (const auto& ch : config.channels) {
    if (!seen.insert(ch).second)
      out.push_back(error_at("duplicate channel " + ch.from_instance + "." +
                             ch.from_port + " -> " + ch.to_instance + "." +
                             ch.to_port));
    const ComponentInstance* from = config.find_instance(ch.from_instance);
    const ComponentInstance* to = config.find_instance(ch.to_instance);
    if (!from || !to) {
      out.push_back(error_at("channel endpoint '" +
                             (from ? ch.to_instance : ch.from_instance) +
                             "' does not name an instance"));
      continue;
    }
    auto df = goal.port_direction(from->type_name, ch.from_port);
    auto dt = goal.port_direction(to->type_name, ch.to_port);
    if (!df || *df != PortDirection::Out)
      out.push_back(error_at("channel source " + ch.from_instance + "." +
                             ch.from_port + " is not an out port"));
    if (!dt || *dt != PortDirection::In)
      out.push_back(error_at("channel target " + ch.to_instance + "." +
                             ch.to_port + " is not an in port"));
  }
  return out;
}

}  // namespace deladas
