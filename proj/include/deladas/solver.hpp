#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "deladas/model.hpp"

namespace deladas {

// ---------------------------------------------------------------------------
// Variable bindings
// ---------------------------------------------------------------------------

struct EntityRef {
  DomainKind kind = DomainKind::Host;
  std::string id;
  std::string type_name;  // Instance refs only
};

struct Binding {
  std::vector<std::pair<std::string, EntityRef>> entries;

  const EntityRef* find(const std::string& var) const {
    for (auto it = entries.rbegin(); it != entries.rend(); ++it)
      if (it->first == var) return &it->second;
    return nullptr;
  }
  void push(const std::string& var, EntityRef ref) {
    entries.emplace_back(var, std::move(ref));
  }
  void pop() { entries.pop_back(); }
};

// ---------------------------------------------------------------------------
// Reachability over channels between instances of one component type
// ---------------------------------------------------------------------------

struct ReachabilityRelation {
  std::vector<std::string> instance_ids;          // sorted
  std::vector<std::vector<bool>> matrix;          // [from][to], reflexive

  bool is_reachable(const std::string& a, const std::string& b) const {
    auto ia = std::lower_bound(instance_ids.begin(), instance_ids.end(), a);
    auto ib = std::lower_bound(instance_ids.begin(), instance_ids.end(), b);
    if (ia == instance_ids.end() || *ia != a) return a == b;
    if (ib == instance_ids.end() || *ib != b) return false;
    return matrix[static_cast<size_t>(ia - instance_ids.begin())]
                 [static_cast<size_t>(ib - instance_ids.begin())];
  }
};

namespace detail {

/// Tarjan strongly-connected components; returns component index per node,
/// numbered in reverse topological order of the condensation.
inline int tarjan_scc(const std::vector<std::vector<int>>& adj,
                      std::vector<int>& comp) {
  const int n = static_cast<int>(adj.size());
  comp.assign(static_cast<size_t>(n), -1);
  std::vector<int> index(static_cast<size_t>(n), -1), low(static_cast<size_t>(n), 0);
  std::vector<bool> on_stack(static_cast<size_t>(n), false);
  std::vector<int> stack;
  int next_index = 0, comp_count = 0;

  // Iterative DFS: frames of (node, next child position).
  std::vector<std::pair<int, size_t>> frames;
  for (int root = 0; root < n; ++root) {
    if (index[static_cast<size_t>(root)] != -1) continue;
    frames.push_back({root, 0});
    while (!frames.empty()) {
      auto& [v, child] = frames.back();
      if (child == 0) {
        index[static_cast<size_t>(v)] = low[static_cast<size_t>(v)] = next_index++;
        stack.push_back(v);
        on_stack[static_cast<size_t>(v)] = true;
      }
      if (child < adj[static_cast<size_t>(v)].size()) {
        int w = adj[static_cast<size_t>(v)][child++];
        if (index[static_cast<size_t>(w)] == -1) {
          frames.push_back({w, 0});
        } else if (on_stack[static_cast<size_t>(w)]) {
          low[static_cast<size_t>(v)] =
              std::min(low[static_cast<size_t>(v)], index[static_cast<size_t>(w)]);
        }
        continue;
      }
      if (low[static_cast<size_t>(v)] == index[static_cast<size_t>(v)]) {
        while (true) {
          int w = stack.back();
          stack.pop_back();
          on_stack[static_cast<size_t>(w)] = false;
          comp[static_cast<size_t>(w)] = comp_count;
          if (w == v) break;
        }
        ++comp_count;
      }
      int finished = v;
      frames.pop_back();
      if (!frames.empty()) {
        int parent = frames.back().first;
        low[static_cast<size_t>(parent)] = std::min(
            low[static_cast<size_t>(parent)], low[static_cast<size_t>(finished)]);
      }
    }
  }
  return comp_count;
}

/// All-pairs reachability for a directed graph via SCC condensation.
inline std::vector<std::vector<bool>> reachability_matrix(
    const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> comp;
  int comp_count = tarjan_scc(adj, comp);

  // Component-level reachability. Tarjan numbers components in reverse
  // topological order, so edges go from higher to lower component indices
  // and a single ascending sweep closes the relation.
  std::vector<std::vector<bool>> comp_reach(
      static_cast<size_t>(comp_count),
      std::vector<bool>(static_cast<size_t>(comp_count), false));
  for (int c = 0; c < comp_count; ++c) comp_reach[static_cast<size_t>(c)][static_cast<size_t>(c)] = true;
  for (int v = 0; v < n; ++v)
    for (int w : adj[static_cast<size_t>(v)]) {
      int cv = comp[static_cast<size_t>(v)], cw = comp[static_cast<size_t>(w)];
      if (cv == cw) continue;
      for (int t = 0; t < comp_count; ++t)
        if (comp_reach[static_cast<size_t>(cw)][static_cast<size_t>(t)])
          comp_reach[static_cast<size_t>(cv)][static_cast<size_t>(t)] = true;
    }
  // Repeat the edge sweep until stable; the condensation is small.
  bool changed = true;
  while (changed) {
    changed = false;
    for (int v = 0; v < n; ++v)
      for (int w : adj[static_cast<size_t>(v)]) {
        int cv = comp[static_cast<size_t>(v)], cw = comp[static_cast<size_t>(w)];
        for (int t = 0; t < comp_count; ++t)
          if (comp_reach[static_cast<size_t>(cw)][static_cast<size_t>(t)] &&
              !comp_reach[static_cast<size_t>(cv)][static_cast<size_t>(t)]) {
            comp_reach[static_cast<size_t>(cv)][static_cast<size_t>(t)] = true;
            changed = true;
          }
      }
  }

  std::vector<std::vector<bool>> reach(static_cast<size_t>(n),
                                       std::vector<bool>(static_cast<size_t>(n), false));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      reach[static_cast<size_t>(a)][static_cast<size_t>(b)] =
          comp_reach[static_cast<size_t>(comp[static_cast<size_t>(a)])]
                    [static_cast<size_t>(comp[static_cast<size_t>(b)])];
  return reach;
}

}  // namespace detail

/// Directed-path reachability between instances of `type_name`, with edges
/// restricted to channels whose two endpoints are both of that type.
/// Reflexive by definition.
inline ReachabilityRelation strongly_connected_reachability(
    const Configuration& config, const std::string& type_name) {
  ReachabilityRelation rel;
  for (const auto& inst : config.instances)
    if (inst.type_name == type_name) rel.instance_ids.push_back(inst.id);
  std::sort(rel.instance_ids.begin(), rel.instance_ids.end());

  auto idx_of = [&](const std::string& id) -> int {
    auto it = std::lower_bound(rel.instance_ids.begin(), rel.instance_ids.end(), id);
    if (it == rel.instance_ids.end() || *it != id) return -1;
    return static_cast<int>(it - rel.instance_ids.begin());
  };

  std::vector<std::vector<int>> adj(rel.instance_ids.size());
  for (const auto& ch : config.channels) {
    int from = idx_of(ch.from_instance);
    int to = idx_of(ch.to_instance);
    if (from >= 0 && to >= 0 && from != to) adj[static_cast<size_t>(from)].push_back(to);
  }
  rel.matrix = detail::reachability_matrix(adj);
  return rel;
}

// ---------------------------------------------------------------------------
// Constraint evaluation over a full configuration
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<const ComponentInstance*> instances_of(
    const Configuration& config, const std::string& type) {
  std::vector<const ComponentInstance*> out;
  for (const auto& inst : config.instances)
    if (inst.type_name == type) out.push_back(&inst);
  return out;  // config is canonical, so this is sorted by id
}

inline bool channel_between(const Configuration& config, const std::string& a,
                            const std::string& b) {
  for (const auto& ch : config.channels)
    if ((ch.from_instance == a && ch.to_instance == b) ||
        (ch.from_instance == b && ch.to_instance == a))
      return true;
  return false;
}

inline int64_t eval_int(const IntExpr& e, const Configuration& config,
                        const Goal&, const Binding& binding) {
  switch (e.kind) {
    case IntExpr::Kind::Literal:
      return e.literal;
    case IntExpr::Kind::CardInstances: {
      int64_t count = 0;
      if (e.scope_ref == "deployment") {
        for (const auto& inst : config.instances)
          if (inst.type_name == e.type_name) ++count;
      } else {
        const EntityRef* host = binding.find(e.scope_ref);
        if (!host) return 0;
        for (const auto& inst : config.instances)
          if (inst.type_name == e.type_name && inst.host == host->id) ++count;
      }
      return count;
    }
    case IntExpr::Kind::CardConnected: {
      const EntityRef* target = binding.find(e.target_var);
      if (!target) return 0;
      int64_t count = 0;
      for (const auto& inst : config.instances)
        if (inst.type_name == e.type_name &&
            channel_between(config, inst.id, target->id))
          ++count;
      return count;
    }
  }
  return 0;
}

inline bool compare(int64_t a, CompareOp op, int64_t b) {
  switch (op) {
    case CompareOp::Eq: return a == b;
    case CompareOp::Ne: return a != b;
    case CompareOp::Le: return a <= b;
    case CompareOp::Lt: return a < b;
    case CompareOp::Ge: return a >= b;
    case CompareOp::Gt: return a > b;
  }
  return false;
}

}  // namespace detail

/// First-order evaluation: host quantifiers range over the goal's available
/// hosts, instance quantifiers over the configuration's instances of the
/// named type; `connectsto` is true iff the directed channel implied by the
/// port directions exists.
inline bool evaluate(const ConstraintExpr& expr, const Configuration& config,
                     const Goal& goal, Binding& binding) {
  struct Vis {
    const ConstraintExpr& expr;
    const Configuration& config;
    const Goal& goal;
    Binding& binding;

    bool quantify(const Quantifier& q, size_t var_index) const {
      if (var_index == q.vars.size()) {
        for (const auto& term : q.body)
          if (!evaluate(term, config, goal, binding)) return false;
        return true;
      }
      const std::string& var = q.vars[var_index];
      auto test = [&](EntityRef ref) {
        binding.push(var, std::move(ref));
        bool r = quantify(q, var_index + 1);
        binding.pop();
        return r;
      };
      if (q.domain == DomainKind::Host) {
        for (const auto& host : goal.available_hosts()) {
          bool r = test({DomainKind::Host, host, {}});
          if (q.universal && !r) return false;
          if (!q.universal && r) return true;
        }
      } else {
        for (const auto* inst : detail::instances_of(config, q.type_name)) {
          if (q.domain_ref != "deployment") {
            const EntityRef* host = binding.find(q.domain_ref);
            if (!host || inst->host != host->id) continue;
          }
          bool r = test({DomainKind::Instance, inst->id, inst->type_name});
          if (q.universal && !r) return false;
          if (!q.universal && r) return true;
        }
      }
      return q.universal;
    }

    bool operator()(const Quantifier& q) const { return quantify(q, 0); }
    bool operator()(const Conjunction& c) const {
      for (const auto& t : c.terms)
        if (!evaluate(t, config, goal, binding)) return false;
      return true;
    }
    bool operator()(const Disjunction& d) const {
      for (const auto& t : d.terms)
        if (evaluate(t, config, goal, binding)) return true;
      return false;
    }
    bool operator()(const Negation& n) const {
      return n.term.empty() ? true : !evaluate(n.term[0], config, goal, binding);
    }
    bool operator()(const Compare& c) const {
      return detail::compare(detail::eval_int(c.lhs, config, goal, binding), c.op,
                             detail::eval_int(c.rhs, config, goal, binding));
    }
    bool operator()(const ConnectsTo& c) const {
      const EntityRef* a = binding.find(c.var_a);
      const EntityRef* b = binding.find(c.var_b);
      if (!a || !b) return false;
      auto dir = goal.port_direction(a->type_name, c.port_a);
      if (!dir) return false;
      Channel want = *dir == PortDirection::Out
                         ? Channel{a->id, c.port_a, b->id, c.port_b}
                         : Channel{b->id, c.port_b, a->id, c.port_a};
      return config.has_channel(want);
    }
    bool operator()(const Reachable& r) const {
      const EntityRef* a = binding.find(r.var_a);
      const EntityRef* b = binding.find(r.var_b);
      if (!a || !b) return false;
      if (a->id == b->id) return true;
      return strongly_connected_reachability(config, a->type_name)
          .is_reachable(a->id, b->id);
    }
    bool operator()(const NotEqualVars& n) const {
      const EntityRef* a = binding.find(n.var_a);
      const EntityRef* b = binding.find(n.var_b);
      return a && b && a->id != b->id;
    }
  };
  return std::visit(Vis{expr, config, goal, binding}, expr.node);
}

struct ClauseViolation {
  int index = 0;  // 1-based clause position in the constraintset
  int line = 0;
};

struct CheckResult {
  bool valid = false;
  std::vector<ClauseViolation> violations;
};

/// Evaluates every top-level clause; valid iff all hold.
inline CheckResult check_configuration(const Configuration& config,
                                       const Goal& goal) {
  CheckResult result;
  Binding binding;
  for (size_t i = 0; i < goal.clauses.size(); ++i)
    if (!evaluate(goal.clauses[i], config, goal, binding))
      result.violations.push_back(
          {static_cast<int>(i) + 1, goal.clauses[i].line});
  result.valid = result.violations.empty();
  return result;
}

// ---------------------------------------------------------------------------
// Search
// ---------------------------------------------------------------------------

enum class SolveStatus { Sat, Unsat, BudgetExhausted };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Sat: return "SAT";
    case SolveStatus::Unsat: return "UNSAT";
    case SolveStatus::BudgetExhausted: return "BUDGET_EXHAUSTED";
  }
  return "?";
}

struct SolveOptions {
  int max_solutions = 1;
  int max_instances_per_type = 0;  // 0: use the number of available hosts
  uint64_t seed = 0;               // 0: hosts tried in lexicographic order
  int64_t node_budget = 10'000'000;
};

struct SolveResult {
  SolveStatus status = SolveStatus::Unsat;
  std::vector<Configuration> solutions;
  int64_t nodes_explored = 0;
};

namespace detail {

enum class Tri : int8_t { False = -1, Unknown = 0, True = 1 };

inline Tri tri_not(Tri t) {
  return static_cast<Tri>(-static_cast<int8_t>(t));
}

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d649bb133111ebULL;
  return z ^ (z >> 31);
}

/// True when the expression never observes hosts: no host quantifiers, no
/// host-scoped instance quantifiers, no per-host cardinalities. For such
/// clauses wiring feasibility depends only on the instance counts, not on
/// where the instances sit.
inline bool host_free(const ConstraintExpr& expr) {
  struct Vis {
    bool operator()(const Quantifier& q) const {
      if (q.domain == DomainKind::Host) return false;
      if (q.domain_ref != "deployment") return false;
      for (const auto& t : q.body)
        if (!host_free(t)) return false;
      return true;
    }
    bool operator()(const Conjunction& c) const {
      for (const auto& t : c.terms)
        if (!host_free(t)) return false;
      return true;
    }
    bool operator()(const Disjunction& d) const {
      for (const auto& t : d.terms)
        if (!host_free(t)) return false;
      return true;
    }
    bool operator()(const Negation& n) const {
      for (const auto& t : n.term)
        if (!host_free(t)) return false;
      return true;
    }
    bool operator()(const Compare& c) const {
      auto ok = [](const IntExpr& e) {
        return e.kind != IntExpr::Kind::CardInstances ||
               e.scope_ref == "deployment";
      };
      return ok(c.lhs) && ok(c.rhs);
    }
    bool operator()(const ConnectsTo&) const { return true; }
    bool operator()(const Reachable&) const { return true; }
    bool operator()(const NotEqualVars&) const { return true; }
  };
  return std::visit(Vis{}, expr.node);
}

/// True when the expression's truth depends only on instance placement,
/// never on channels.
inline bool channel_free(const ConstraintExpr& expr) {
  struct Vis {
    bool operator()(const Quantifier& q) const {
      for (const auto& t : q.body)
        if (!channel_free(t)) return false;
      return true;
    }
    bool operator()(const Conjunction& c) const {
      for (const auto& t : c.terms)
        if (!channel_free(t)) return false;
      return true;
    }
    bool operator()(const Disjunction& d) const {
      for (const auto& t : d.terms)
        if (!channel_free(t)) return false;
      return true;
    }
    bool operator()(const Negation& n) const {
      for (const auto& t : n.term)
        if (!channel_free(t)) return false;
      return true;
    }
    bool operator()(const Compare& c) const {
      return c.lhs.kind != IntExpr::Kind::CardConnected &&
             c.rhs.kind != IntExpr::Kind::CardConnected;
    }
    bool operator()(const ConnectsTo&) const { return false; }
    bool operator()(const Reachable&) const { return false; }
    bool operator()(const NotEqualVars&) const { return true; }
  };
  return std::visit(Vis{}, expr.node);
}

/// Detects `forall host h in deployment (B)` clauses whose body B depends
/// only on per-host instance cardinalities and rejects an empty host. Such
/// a clause means no available host may be left unpopulated, which yields a
/// strong lower bound on total instances.
inline bool forbids_empty_hosts(const ConstraintExpr& clause, const Goal& goal) {
  const auto* q = std::get_if<Quantifier>(&clause.node);
  if (!q || !q->universal || q->domain != DomainKind::Host ||
      q->domain_ref != "deployment" || q->vars.size() != 1)
    return false;

  // The body must be built from comparisons over literals and per-host
  // instance counts only; anything else could depend on global state.
  struct LocalOnly {
    const std::string& host_var;
    bool check_int(const IntExpr& e) const {
      if (e.kind == IntExpr::Kind::Literal) return true;
      return e.kind == IntExpr::Kind::CardInstances && e.scope_ref == host_var;
    }
    bool operator()(const ConstraintExpr& expr) const {
      struct Vis {
        const LocalOnly& self;
        bool operator()(const Quantifier&) const { return false; }
        bool operator()(const Conjunction& c) const {
          for (const auto& t : c.terms)
            if (!self(t)) return false;
          return true;
        }
        bool operator()(const Disjunction& d) const {
          for (const auto& t : d.terms)
            if (!self(t)) return false;
          return true;
        }
        bool operator()(const Negation& n) const {
          for (const auto& t : n.term)
            if (!self(t)) return false;
          return true;
        }
        bool operator()(const Compare& c) const {
          return self.check_int(c.lhs) && self.check_int(c.rhs);
        }
        bool operator()(const ConnectsTo&) const { return false; }
        bool operator()(const Reachable&) const { return false; }
        bool operator()(const NotEqualVars&) const { return false; }
      };
      return std::visit(Vis{*this}, expr.node);
    }
  } local_only{q->vars[0]};
  for (const auto& term : q->body)
    if (!local_only(term)) return false;

  // Evaluate the body for a host carrying no instances.
  Configuration empty;
  Binding binding;
  binding.push(q->vars[0], {DomainKind::Host, "__empty__", {}});
  for (const auto& term : q->body)
    if (!evaluate(term, empty, goal, binding)) return true;
  return false;
}

struct PlacedInstance {
  std::string id;
  std::string type_name;
  int type_index = 0;
  bool survivor = false;
  std::string preferred_host;  // survivors only
  int host = -1;               // index into the host candidate order
};

class Searcher {
 public:
  Searcher(const Goal& goal, const SolveOptions& opts,
           const Configuration* previous)
      : goal_(goal), opts_(opts) {
    hosts_ = goal.available_hosts();
    if (opts_.seed != 0) {
      uint64_t rng = opts_.seed;
      for (size_t i = hosts_.size(); i > 1; --i)
        std::swap(hosts_[i - 1], hosts_[splitmix64(rng) % i]);
    }
    max_per_type_ = opts_.max_instances_per_type > 0
                        ? opts_.max_instances_per_type
                        : static_cast<int>(hosts_.size());
    if (previous) {
      for (const auto& inst : previous->instances)
        if (std::find(hosts_.begin(), hosts_.end(), inst.host) != hosts_.end())
          survivors_.push_back(inst);
      std::sort(survivors_.begin(), survivors_.end());
      std::set<std::string> alive;
      for (const auto& s : survivors_) alive.insert(s.id);
      for (const auto& ch : previous->channels)
        if (alive.count(ch.from_instance) && alive.count(ch.to_instance))
          previous_channels_.insert(ch);
      for (const auto& inst : previous->instances) {
        size_t dash = inst.id.rfind('-');
        if (dash == std::string::npos) continue;
        int suffix = 0;
        for (size_t k = dash + 1; k < inst.id.size(); ++k) {
          char c = inst.id[k];
          if (c < '0' || c > '9') { suffix = 0; break; }
          suffix = suffix * 10 + (c - '0');
        }
        auto& counter = id_counter_[inst.id.substr(0, dash)];
        counter = std::max(counter, suffix);
      }
      incremental_ = true;
    }
    wiring_placement_independent_ = true;
    for (const auto& clause : goal_.clauses) {
      placement_clauses_.push_back(channel_free(clause));
      if (forbids_empty_hosts(clause, goal_)) no_empty_hosts_ = true;
      if (!placement_clauses_.back() && !host_free(clause))
        wiring_placement_independent_ = false;
    }
  }

  SolveResult run() {
    SolveResult result;
    if (!enumerate_count_vectors(result)) {
      // budget exhausted mid-search
      result.status = result.solutions.empty() ? SolveStatus::BudgetExhausted
                                               : SolveStatus::Sat;
    } else {
      result.status = result.solutions.empty() ? SolveStatus::Unsat
                                               : SolveStatus::Sat;
    }
    result.nodes_explored = nodes_;
    return result;
  }

 private:
  const Goal& goal_;
  SolveOptions opts_;
  std::vector<std::string> hosts_;
  int max_per_type_ = 0;
  bool incremental_ = false;
  std::vector<ComponentInstance> survivors_;
  std::set<Channel> previous_channels_;
  std::map<std::string, int> id_counter_;  // per-type max numeric suffix
  std::vector<bool> placement_clauses_;
  bool no_empty_hosts_ = false;
  // When every channel-dependent clause is host-free, an exhausted wiring
  // search for one placement proves the whole count vector unwirable.
  bool wiring_placement_independent_ = false;
  bool vector_unwirable_ = false;
  int64_t nodes_ = 0;
  bool budget_hit_ = false;

  // Per-placement wiring state.
  struct Candidate {
    Channel channel;
    int from_inst = 0, to_inst = 0;
    bool in_previous = false;
  };
  std::vector<PlacedInstance> placed_;
  std::vector<Candidate> candidates_;
  std::vector<int8_t> state_;  // 0 undecided, 1 wired, 2 excluded

  bool spend_node() {
    if (++nodes_ > opts_.node_budget) {
      budget_hit_ = true;
      return false;
    }
    return true;
  }

  // --- layer 1: instance counts per type -------------------------------

  bool enumerate_count_vectors(SolveResult& result) {
    const size_t type_count = goal_.component_types.size();
    std::vector<std::vector<int>> vectors;
    std::vector<int> current(type_count, 0);
    build_vectors(current, 0, vectors);

    std::vector<int> survivor_counts(type_count, 0);
    for (size_t t = 0; t < type_count; ++t)
      for (const auto& s : survivors_)
        if (s.type_name == goal_.component_types[t].name)
          ++survivor_counts[t];

    std::stable_sort(vectors.begin(), vectors.end(),
                     [&](const std::vector<int>& a, const std::vector<int>& b) {
                       auto key = [&](const std::vector<int>& v) {
                         int dist = 0, sum = 0;
                         for (size_t t = 0; t < v.size(); ++t) {
                           dist += std::abs(v[t] - survivor_counts[t]);
                           sum += v[t];
                         }
                         return std::make_pair(incremental_ ? dist : 0, sum);
                       };
                       auto ka = key(a), kb = key(b);
                       if (ka != kb) return ka < kb;
                       return a < b;
                     });

    int total_hosts = static_cast<int>(hosts_.size());
    for (const auto& vec : vectors) {
      int total = std::accumulate(vec.begin(), vec.end(), 0);
      if (no_empty_hosts_ && total < total_hosts) continue;
      if (!spend_node()) return false;
      if (!try_count_vector(vec, result)) return false;
      if (static_cast<int>(result.solutions.size()) >= opts_.max_solutions)
        return true;
    }
    return true;
  }

  void build_vectors(std::vector<int>& current, size_t t,
                     std::vector<std::vector<int>>& out) {
    if (t == current.size()) {
      out.push_back(current);
      return;
    }
    for (int n = 0; n <= max_per_type_; ++n) {
      current[t] = n;
      build_vectors(current, t + 1, out);
    }
    current[t] = 0;
  }

  // --- layer 2: host assignment ----------------------------------------

  bool try_count_vector(const std::vector<int>& counts, SolveResult& result) {
    placed_.clear();
    std::map<std::string, int> counters = id_counter_;
    for (size_t t = 0; t < counts.size(); ++t) {
      const std::string& type = goal_.component_types[t].name;
      std::vector<const ComponentInstance*> type_survivors;
      for (const auto& s : survivors_)
        if (s.type_name == type) type_survivors.push_back(&s);
      for (int k = 0; k < counts[t]; ++k) {
        PlacedInstance inst;
        inst.type_name = type;
        inst.type_index = static_cast<int>(t);
        if (k < static_cast<int>(type_survivors.size())) {
          inst.survivor = true;
          inst.id = type_survivors[static_cast<size_t>(k)]->id;
          inst.preferred_host = type_survivors[static_cast<size_t>(k)]->host;
        } else {
          inst.id = type + "-" + std::to_string(++counters[type]);
        }
        placed_.push_back(std::move(inst));
      }
    }
    vector_unwirable_ = false;
    std::vector<int> host_load(hosts_.size(), 0);
    return place_instance(0, host_load, result);
  }

  bool place_instance(size_t i, std::vector<int>& host_load,
                      SolveResult& result) {
    if (budget_hit_) return false;
    if (vector_unwirable_) return true;
    if (i == placed_.size()) {
      if (!placement_satisfies()) return true;  // prune, keep searching
      size_t found_before = result.solutions.size();
      bool ok = wire(result);
      if (ok && !budget_hit_ && wiring_placement_independent_ &&
          result.solutions.size() == found_before)
        vector_unwirable_ = true;
      return ok;
    }
    if (no_empty_hosts_) {
      int empty = 0;
      for (int load : host_load)
        if (load == 0) ++empty;
      if (empty > static_cast<int>(placed_.size() - i)) return true;
    }
    PlacedInstance& inst = placed_[i];

    std::vector<int> order;
    if (inst.survivor) {
      for (size_t h = 0; h < hosts_.size(); ++h)
        if (hosts_[h] == inst.preferred_host) order.push_back(static_cast<int>(h));
      for (size_t h = 0; h < hosts_.size(); ++h)
        if (hosts_[h] != inst.preferred_host) order.push_back(static_cast<int>(h));
    } else {
      // Fresh instances of a type take hosts in nondecreasing candidate
      // position, which removes permutation symmetry among them.
      int floor = 0;
      if (i > 0 && !placed_[i - 1].survivor &&
          placed_[i - 1].type_index == inst.type_index)
        floor = placed_[i - 1].host;
      for (int h = floor; h < static_cast<int>(hosts_.size()); ++h)
        order.push_back(h);
    }

    for (int h : order) {
      if (!spend_node()) return false;
      inst.host = h;
      ++host_load[static_cast<size_t>(h)];
      if (!place_instance(i + 1, host_load, result)) return false;
      --host_load[static_cast<size_t>(h)];
      inst.host = -1;
      if (static_cast<int>(result.solutions.size()) >= opts_.max_solutions)
        return true;
    }
    return true;
  }

  Configuration placement_config() const {
    Configuration config;
    for (const auto& p : placed_)
      config.instances.push_back(
          {p.id, p.type_name, hosts_[static_cast<size_t>(p.host)]});
    return canonicalize(std::move(config));
  }

  bool placement_satisfies() {
    Configuration config = placement_config();
    Binding binding;
    for (size_t i = 0; i < goal_.clauses.size(); ++i)
      if (placement_clauses_[i] &&
          !evaluate(goal_.clauses[i], config, goal_, binding))
        return false;
    return true;
  }

  // --- layer 3: channel wiring with three-valued forward checking -------

  bool wire(SolveResult& result) {
    build_candidates();
    bool ok = wire_search(result);
    return ok;
  }

  void build_candidates() {
    candidates_.clear();
    for (const auto& a : placed_) {
      const ComponentType* ta = goal_.find_type(a.type_name);
      if (!ta) continue;
      for (const auto& b : placed_) {
        if (a.id == b.id) continue;
        const ComponentType* tb = goal_.find_type(b.type_name);
        if (!tb) continue;
        for (const auto& pa : ta->ports) {
          if (pa.direction != PortDirection::Out) continue;
          for (const auto& pb : tb->ports) {
            if (pb.direction != PortDirection::In) continue;
            Candidate c;
            c.channel = {a.id, pa.name, b.id, pb.name};
            candidates_.push_back(std::move(c));
          }
        }
      }
    }
    std::sort(candidates_.begin(), candidates_.end(),
              [](const Candidate& x, const Candidate& y) {
                return x.channel < y.channel;
              });
    std::map<std::string, int> inst_index;
    for (size_t i = 0; i < placed_.size(); ++i)
      inst_index[placed_[i].id] = static_cast<int>(i);
    for (auto& c : candidates_) {
      c.from_inst = inst_index[c.channel.from_instance];
      c.to_inst = inst_index[c.channel.to_instance];
      c.in_previous = previous_channels_.count(c.channel) > 0;
    }
    state_.assign(candidates_.size(), 0);
  }

  int find_candidate(const Channel& ch) const {
    auto it = std::lower_bound(
        candidates_.begin(), candidates_.end(), ch,
        [](const Candidate& c, const Channel& key) { return c.channel < key; });
    if (it == candidates_.end() || !(it->channel == ch)) return -1;
    return static_cast<int>(it - candidates_.begin());
  }

  struct Interval {
    int64_t lo = 0, hi = 0;
  };

  Tri eval3(const ConstraintExpr& expr, Binding& binding,
            std::vector<int>& touched) const {
    struct Vis {
      const Searcher& self;
      const ConstraintExpr& expr;
      Binding& binding;
      std::vector<int>& touched;

      Tri quantify(const Quantifier& q, size_t var_index) const {
        if (var_index == q.vars.size()) {
          Tri acc = Tri::True;
          for (const auto& term : q.body) {
            Tri t = self.eval3(term, binding, touched);
            if (t == Tri::False) return Tri::False;
            if (t == Tri::Unknown) acc = Tri::Unknown;
          }
          return acc;
        }
        const std::string& var = q.vars[var_index];
        Tri acc = q.universal ? Tri::True : Tri::False;
        auto combine = [&](Tri r) {
          if (q.universal) {
            if (r == Tri::False) return false;
            if (r == Tri::Unknown) acc = Tri::Unknown;
          } else {
            if (r == Tri::True) return false;
            if (r == Tri::Unknown) acc = Tri::Unknown;
          }
          return true;
        };
        if (q.domain == DomainKind::Host) {
          for (const auto& host : self.hosts_) {
            binding.push(var, {DomainKind::Host, host, {}});
            Tri r = quantify(q, var_index + 1);
            binding.pop();
            if (!combine(r)) return q.universal ? Tri::False : Tri::True;
          }
        } else {
          for (const auto& inst : self.placed_) {
            if (inst.type_name != q.type_name) continue;
            if (q.domain_ref != "deployment") {
              const EntityRef* host = binding.find(q.domain_ref);
              if (!host || self.hosts_[static_cast<size_t>(inst.host)] != host->id)
                continue;
            }
            binding.push(var, {DomainKind::Instance, inst.id, inst.type_name});
            Tri r = quantify(q, var_index + 1);
            binding.pop();
            if (!combine(r)) return q.universal ? Tri::False : Tri::True;
          }
        }
        return acc;
      }

      Interval eval_int(const IntExpr& e) const {
        switch (e.kind) {
          case IntExpr::Kind::Literal:
            return {e.literal, e.literal};
          case IntExpr::Kind::CardInstances: {
            int64_t count = 0;
            const EntityRef* host =
                e.scope_ref == "deployment" ? nullptr : binding.find(e.scope_ref);
            for (const auto& inst : self.placed_) {
              if (inst.type_name != e.type_name) continue;
              if (host && self.hosts_[static_cast<size_t>(inst.host)] != host->id)
                continue;
              ++count;
            }
            return {count, count};
          }
          case IntExpr::Kind::CardConnected: {
            const EntityRef* target = binding.find(e.target_var);
            if (!target) return {0, 0};
            Interval iv;
            for (const auto& inst : self.placed_) {
              if (inst.type_name != e.type_name) continue;
              bool wired = false, possible = false;
              int first_undecided = -1;
              for (size_t c = 0; c < self.candidates_.size(); ++c) {
                const auto& cand = self.candidates_[c];
                bool touches = (cand.channel.from_instance == inst.id &&
                                cand.channel.to_instance == target->id) ||
                               (cand.channel.from_instance == target->id &&
                                cand.channel.to_instance == inst.id);
                if (!touches) continue;
                if (self.state_[c] == 1) wired = true;
                if (self.state_[c] != 2) {
                  possible = true;
                  if (self.state_[c] == 0 && first_undecided < 0)
                    first_undecided = static_cast<int>(c);
                }
              }
              if (wired) {
                ++iv.lo;
                ++iv.hi;
              } else if (possible) {
                ++iv.hi;
                if (first_undecided >= 0) touched.push_back(first_undecided);
              }
            }
            return iv;
          }
        }
        return {0, 0};
      }

      Tri operator()(const Quantifier& q) const { return quantify(q, 0); }
      Tri operator()(const Conjunction& c) const {
        Tri acc = Tri::True;
        for (const auto& t : c.terms) {
          Tri r = self.eval3(t, binding, touched);
          if (r == Tri::False) return Tri::False;
          if (r == Tri::Unknown) acc = Tri::Unknown;
        }
        return acc;
      }
      Tri operator()(const Disjunction& d) const {
        Tri acc = Tri::False;
        for (const auto& t : d.terms) {
          Tri r = self.eval3(t, binding, touched);
          if (r == Tri::True) return Tri::True;
          if (r == Tri::Unknown) acc = Tri::Unknown;
        }
        return acc;
      }
      Tri operator()(const Negation& n) const {
        return n.term.empty() ? Tri::True
                              : tri_not(self.eval3(n.term[0], binding, touched));
      }
      Tri operator()(const Compare& c) const {
        Interval a = eval_int(c.lhs);
        Interval b = eval_int(c.rhs);
        switch (c.op) {
          case CompareOp::Eq:
            if (a.lo == a.hi && b.lo == b.hi && a.lo == b.lo) return Tri::True;
            if (a.hi < b.lo || b.hi < a.lo) return Tri::False;
            return Tri::Unknown;
          case CompareOp::Ne:
            if (a.hi < b.lo || b.hi < a.lo) return Tri::True;
            if (a.lo == a.hi && b.lo == b.hi && a.lo == b.lo) return Tri::False;
            return Tri::Unknown;
          case CompareOp::Le:
            if (a.hi <= b.lo) return Tri::True;
            if (a.lo > b.hi) return Tri::False;
            return Tri::Unknown;
          case CompareOp::Lt:
            if (a.hi < b.lo) return Tri::True;
            if (a.lo >= b.hi) return Tri::False;
            return Tri::Unknown;
          case CompareOp::Ge:
            if (a.lo >= b.hi) return Tri::True;
            if (a.hi < b.lo) return Tri::False;
            return Tri::Unknown;
          case CompareOp::Gt:
            if (a.lo > b.hi) return Tri::True;
            if (a.hi <= b.lo) return Tri::False;
            return Tri::Unknown;
        }
        return Tri::Unknown;
      }
      Tri operator()(const ConnectsTo& c) const {
        const EntityRef* a = binding.find(c.var_a);
        const EntityRef* b = binding.find(c.var_b);
        if (!a || !b) return Tri::False;
        auto dir = self.goal_.port_direction(a->type_name, c.port_a);
        if (!dir) return Tri::False;
        Channel want = *dir == PortDirection::Out
                           ? Channel{a->id, c.port_a, b->id, c.port_b}
                           : Channel{b->id, c.port_b, a->id, c.port_a};
        int idx = self.find_candidate(want);
        if (idx < 0) return Tri::False;
        if (self.state_[static_cast<size_t>(idx)] == 1) return Tri::True;
        if (self.state_[static_cast<size_t>(idx)] == 2) return Tri::False;
        touched.push_back(idx);
        return Tri::Unknown;
      }
      Tri operator()(const Reachable& r) const {
        const EntityRef* a = binding.find(r.var_a);
        const EntityRef* b = binding.find(r.var_b);
        if (!a || !b) return Tri::False;
        if (a->id == b->id) return Tri::True;
        if (self.type_reachable(a->type_name, a->id, b->id, false))
          return Tri::True;
        if (!self.type_reachable(a->type_name, a->id, b->id, true))
          return Tri::False;
        for (size_t c = 0; c < self.candidates_.size(); ++c)
          if (self.state_[c] == 0 &&
              self.placed_[static_cast<size_t>(self.candidates_[c].from_inst)]
                      .type_name == a->type_name &&
              self.placed_[static_cast<size_t>(self.candidates_[c].to_inst)]
                      .type_name == a->type_name) {
            touched.push_back(static_cast<int>(c));
            break;
          }
        return Tri::Unknown;
      }
      Tri operator()(const NotEqualVars& n) const {
        const EntityRef* a = binding.find(n.var_a);
        const EntityRef* b = binding.find(n.var_b);
        return (a && b && a->id != b->id) ? Tri::True : Tri::False;
      }
    };
    return std::visit(Vis{*this, expr, binding, touched}, expr.node);
  }

  /// BFS over candidate channels between instances of `type`; optimistic
  /// includes undecided channels, pessimistic only wired ones.
  bool type_reachable(const std::string& type, const std::string& from,
                      const std::string& to, bool optimistic) const {
    std::vector<std::string> frontier{from};
    std::set<std::string> seen{from};
    while (!frontier.empty()) {
      std::string cur = frontier.back();
      frontier.pop_back();
      if (cur == to) return true;
      for (size_t c = 0; c < candidates_.size(); ++c) {
        if (candidates_[c].channel.from_instance != cur) continue;
        if (state_[c] == 2 || (!optimistic && state_[c] != 1)) continue;
        const auto& from_inst = placed_[static_cast<size_t>(candidates_[c].from_inst)];
        const auto& to_inst = placed_[static_cast<size_t>(candidates_[c].to_inst)];
        if (from_inst.type_name != type || to_inst.type_name != type) continue;
        if (seen.insert(to_inst.id).second) frontier.push_back(to_inst.id);
      }
    }
    return false;
  }

  bool wire_search(SolveResult& result) {
    if (budget_hit_) return false;
    if (!spend_node()) return false;

    int branch = -1;
    bool branch_in_previous = false;
    for (size_t i = 0; i < goal_.clauses.size(); ++i) {
      if (placement_clauses_[i]) continue;  // already satisfied by placement
      std::vector<int> touched;
      Binding binding;
      Tri t = eval3(goal_.clauses[i], binding, touched);
      if (t == Tri::False) return true;  // prune this wiring subtree
      if (t == Tri::Unknown && branch < 0) {
        // Branch on the first undecided channel this clause observed.
        for (int idx : touched)
          if (state_[static_cast<size_t>(idx)] == 0) {
            branch = idx;
            branch_in_previous = candidates_[static_cast<size_t>(idx)].in_previous;
            break;
          }
      }
    }
    if (branch < 0) {
      emit_solution(result);
      return !budget_hit_;
    }

    // Default order wires the channel first, which drives existential
    // requirements toward satisfaction. In incremental mode channels absent
    // from the previous configuration are tried excluded first so surviving
    // deployments are reproduced exactly when they still satisfy the goal.
    int8_t first = 1, second = 2;
    if (incremental_ && !branch_in_previous) std::swap(first, second);
    for (int8_t value : {first, second}) {
      state_[static_cast<size_t>(branch)] = value;
      bool ok = wire_search(result);
      state_[static_cast<size_t>(branch)] = 0;
      if (!ok) return false;
      if (static_cast<int>(result.solutions.size()) >= opts_.max_solutions)
        return true;
    }
    return true;
  }

  void emit_solution(SolveResult& result) {
    Configuration config = placement_config();
    for (size_t c = 0; c < candidates_.size(); ++c) {
      if (state_[c] == 1)
        config.channels.push_back(candidates_[c].channel);
      else if (state_[c] == 0 && incremental_ && candidates_[c].in_previous)
        config.channels.push_back(candidates_[c].channel);
    }
    // A survivor placed on a new host is a fresh deployment, not a
    // migration: it gets a fresh id so downstream plans remove the old
    // instance and instantiate a new one.
    if (incremental_) {
      std::map<std::string, int> counters = id_counter_;
      for (const auto& inst : config.instances) {
        size_t dash = inst.id.rfind('-');
        if (dash == std::string::npos) continue;
        int suffix = 0;
        bool numeric = dash + 1 < inst.id.size();
        for (size_t k = dash + 1; k < inst.id.size() && numeric; ++k) {
          char ch = inst.id[k];
          if (ch < '0' || ch > '9') numeric = false;
          else suffix = suffix * 10 + (ch - '0');
        }
        if (!numeric) continue;
        auto& counter = counters[inst.id.substr(0, dash)];
        counter = std::max(counter, suffix);
      }
      std::map<std::string, std::string> renamed;
      for (const auto& placed : placed_) {
        if (!placed.survivor || placed.host < 0) continue;
        if (hosts_[static_cast<size_t>(placed.host)] == placed.preferred_host)
          continue;
        renamed[placed.id] =
            placed.type_name + "-" + std::to_string(++counters[placed.type_name]);
      }
      if (!renamed.empty()) {
        for (auto& inst : config.instances) {
          auto it = renamed.find(inst.id);
          if (it != renamed.end()) inst.id = it->second;
        }
        for (auto& ch : config.channels) {
          auto from = renamed.find(ch.from_instance);
          if (from != renamed.end()) ch.from_instance = from->second;
          auto to = renamed.find(ch.to_instance);
          if (to != renamed.end()) ch.to_instance = to->second;
        }
      }
    }
    config = canonicalize(std::move(config));
    config.goal_revision = goal_.revision;
    if (!check_configuration(config, goal_).valid) return;  // never emit unsound
    for (const auto& existing : result.solutions)
      if (existing.instances == config.instances &&
          existing.channels == config.channels)
        return;
    result.solutions.push_back(std::move(config));
  }
};

}  // namespace detail

/// Bounded-complete search: enumerates instance counts per type, host
/// placements (symmetry-broken), and channel wirings with three-valued
/// forward checking. Deterministic for a given goal and options.
inline SolveResult solve(const Goal& goal, const SolveOptions& opts = {}) {
  return detail::Searcher(goal, opts, nullptr).run();
}

/// As solve, but value ordering prefers the surviving part of `previous`
/// (placements and channels are tried first), so a surviving deployment
/// that still satisfies the goal is returned unchanged. Completeness is
/// unaffected.
inline SolveResult solve_incremental(const Goal& goal,
                                     const Configuration& previous,
                                     const SolveOptions& opts = {}) {
  return detail::Searcher(goal, opts, &previous).run();
}

}  // namespace deladas
