#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "deladas/lexer.hpp"
#include "deladas/model.hpp"

namespace deladas {

struct ParseResult {
  std::optional<Goal> goal;  // present iff no error diagnostics
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return goal.has_value(); }
};

struct InferenceResult {
  std::vector<ComponentType> types;
  std::vector<Diagnostic> diagnostics;
};

// ---------------------------------------------------------------------------
// Port inference
// ---------------------------------------------------------------------------
//
// `x.p connectsto y.q` asserts a channel joining the two ports, so their
// directions must be opposite. Directions are resolved by 2-coloring the
// graph whose nodes are (type, port) endpoints and whose edges are the
// connectsto atoms, seeded in priority order: explicitly declared ports,
// then ports literally named `in`/`out`, then the first atom of an
// otherwise unconstrained component (its left operand becomes the out side).

namespace detail {

struct ConnectsUse {
  std::string type_a, port_a;
  std::string type_b, port_b;
  int line = 0, col = 0;
};

inline void collect_connects(const ConstraintExpr& expr,
                             std::vector<ScopeEntry>& scope,
                             std::vector<ConnectsUse>& out) {
  struct Vis {
    const ConstraintExpr& expr;
    std::vector<ScopeEntry>& scope;
    std::vector<ConnectsUse>& out;

    void operator()(const Quantifier& q) const {
      size_t depth = scope.size();
      for (const auto& v : q.vars) scope.push_back({v, q.domain, q.type_name});
      for (const auto& term : q.body) collect_connects(term, scope, out);
      scope.resize(depth);
    }
    void operator()(const Conjunction& c) const {
      for (const auto& t : c.terms) collect_connects(t, scope, out);
    }
    void operator()(const Disjunction& d) const {
      for (const auto& t : d.terms) collect_connects(t, scope, out);
    }
    void operator()(const Negation& n) const {
      for (const auto& t : n.term) collect_connects(t, scope, out);
    }
    void operator()(const Compare&) const {}
    void operator()(const ConnectsTo& c) const {
      const ScopeEntry* a = scope_find(scope, c.var_a);
      const ScopeEntry* b = scope_find(scope, c.var_b);
      if (a && b && a->kind == DomainKind::Instance &&
          b->kind == DomainKind::Instance)
        out.push_back({a->type_name, c.port_a, b->type_name, c.port_b,
                       expr.line, expr.col});
    }
    void operator()(const Reachable&) const {}
    void operator()(const NotEqualVars&) const {}
  };
  std::visit(Vis{expr, scope, out}, expr.node);
}

}  // namespace detail

inline InferenceResult infer_ports(const std::vector<ConstraintExpr>& clauses,
                                   const std::vector<ComponentType>& declared) {
  InferenceResult result;
  result.types = declared;

  std::vector<detail::ConnectsUse> uses;
  {
    std::vector<detail::ScopeEntry> scope;
    for (const auto& clause : clauses)
      detail::collect_connects(clause, scope, uses);
  }

  using Endpoint = std::pair<std::string, std::string>;  // (type, port)
  struct Node {
    std::optional<PortDirection> color;
    bool declared = false;
    std::vector<size_t> edges;  // indices into `uses`
  };
  std::map<Endpoint, Node> nodes;

  auto touch = [&](const std::string& type, const std::string& port,
                   size_t edge) -> Node& {
    Node& n = nodes[{type, port}];
    n.edges.push_back(edge);
    return n;
  };
  for (size_t i = 0; i < uses.size(); ++i) {
    touch(uses[i].type_a, uses[i].port_a, i);
    touch(uses[i].type_b, uses[i].port_b, i);
  }

  // Seeds: declarations first, then the literal in/out naming convention.
  for (auto& [key, node] : nodes) {
    for (const auto& t : declared) {
      if (t.name != key.first) continue;
      if (const PortSpec* p = t.find_port(key.second)) {
        node.color = p->direction;
        node.declared = true;
      }
    }
    if (!node.color) {
      if (key.second == "in") node.color = PortDirection::In;
      if (key.second == "out") node.color = PortDirection::Out;
    }
  }

  auto opposite = [](PortDirection d) {
    return d == PortDirection::In ? PortDirection::Out : PortDirection::In;
  };
  auto endpoint_name = [](const Endpoint& e) { return e.first + "." + e.second; };

  // Propagate opposite-direction constraints along atoms until stable,
  // breaking remaining ties with the first unresolved atom in source order.
  bool progress = true;
  while (true) {
    if (!progress) {
      // Every remaining edge joins two uncolored endpoints; resolve the
      // first one as left=out, right=in and resume propagation.
      bool resolved = false;
      for (const auto& use : uses) {
        Node& a = nodes[{use.type_a, use.port_a}];
        Node& b = nodes[{use.type_b, use.port_b}];
        if (!a.color && !b.color) {
          a.color = PortDirection::Out;
          b.color = PortDirection::In;
          resolved = true;
          break;
        }
      }
      if (!resolved) break;
    }
    progress = false;
    for (const auto& use : uses) {
      Endpoint ka{use.type_a, use.port_a}, kb{use.type_b, use.port_b};
      Node& a = nodes[ka];
      Node& b = nodes[kb];
      if (a.color && b.color) {
        if (*a.color == *b.color) {
          result.diagnostics.push_back(error_at(
              "direction conflict: '" + endpoint_name(ka) + "' and '" +
                  endpoint_name(kb) + "' both resolve to '" +
                  to_string(*a.color) + "' but are joined by connectsto",
              use.line, use.col));
          return result;
        }
      } else if (a.color) {
        b.color = opposite(*a.color);
        progress = true;
      } else if (b.color) {
        a.color = opposite(*b.color);
        progress = true;
      }
    }
  }

  // Materialize inferred ports onto the component types.
  for (const auto& [key, node] : nodes) {
    if (node.declared || !node.color) continue;
    ComponentType* type = nullptr;
    for (auto& t : result.types)
      if (t.name == key.first) type = &t;
    if (!type) continue;  // unknown type; validation reports it
    if (!type->find_port(key.second))
      type->ports.push_back({key.second, *node.color});
  }
  for (auto& t : result.types)
    std::sort(t.ports.begin(), t.ports.end(),
              [](const PortSpec& a, const PortSpec& b) { return a.name < b.name; });
  return result;
}

// ---------------------------------------------------------------------------
// Recursive-descent parser (LL(1), stops at the first syntax error)
// ---------------------------------------------------------------------------

namespace detail {

class GoalParser {
 public:
  GoalParser(const std::vector<Token>& tokens, std::vector<Diagnostic>& diags)
      : toks_(tokens), diags_(diags) {}

  std::optional<Goal> parse() {
    Goal goal;
    if (peek().is_keyword("components")) parse_components(goal);
    if (!ok_) return std::nullopt;
    if (peek().is_keyword("hosts")) parse_hosts(goal);
    if (!ok_) return std::nullopt;
    parse_constraintset(goal);
    if (!ok_) return std::nullopt;
    if (peek().kind != TokenKind::End) {
      fail("expected end of input");
      return std::nullopt;
    }
    return goal;
  }

 private:
  const std::vector<Token>& toks_;
  std::vector<Diagnostic>& diags_;
  size_t pos_ = 0;
  bool ok_ = true;

  const Token& peek(size_t ahead = 0) const {
    size_t i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  const Token& take() {
    const Token& t = peek();
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  void fail(const std::string& expected) {
    if (!ok_) return;
    ok_ = false;
    const Token& t = peek();
    std::string got = t.kind == TokenKind::End ? "end of input" : "'" + t.text + "'";
    diags_.push_back(error_at("expected " + expected + ", got " + got, t.line,
                              t.column));
  }
  bool expect_symbol(std::string_view s) {
    if (peek().is_symbol(s)) {
      take();
      return true;
    }
    fail("'" + std::string(s) + "'");
    return false;
  }
  bool expect_keyword(std::string_view k) {
    if (peek().is_keyword(k)) {
      take();
      return true;
    }
    fail("keyword '" + std::string(k) + "'");
    return false;
  }
  std::string expect_ident(const std::string& what) {
    if (peek().kind == TokenKind::Ident) return take().text;
    fail(what);
    return {};
  }

  // Port-name positions admit the keyword `in`: the example language names
  // client ports `in` and `out`, and only `in` collides with a keyword.
  std::string expect_port_name() {
    if (peek().kind == TokenKind::Ident || peek().is_keyword("in"))
      return take().text;
    fail("a port name");
    return {};
  }

  void parse_components(Goal& goal) {
    expect_keyword("components");
    expect_symbol("{");
    while (ok_ && peek().kind == TokenKind::Ident) {
      ComponentType type;
      type.name = take().text;
      if (peek().is_symbol("{")) {
        take();
        while (ok_) {
          PortSpec port;
          port.name = expect_port_name();
          expect_symbol(":");
          if (peek().is_keyword("in")) {
            take();
            port.direction = PortDirection::In;
          } else if (peek().kind == TokenKind::Ident && peek().text == "out") {
            take();
            port.direction = PortDirection::Out;
          } else {
            fail("'in' or 'out'");
          }
          if (!ok_) return;
          type.ports.push_back(std::move(port));
          if (peek().is_symbol(",")) {
            take();
            continue;
          }
          break;
        }
        expect_symbol("}");
      }
      std::sort(type.ports.begin(), type.ports.end(),
                [](const PortSpec& a, const PortSpec& b) { return a.name < b.name; });
      goal.component_types.push_back(std::move(type));
    }
    expect_symbol("}");
  }

  void parse_hosts(Goal& goal) {
    expect_keyword("hosts");
    expect_symbol("{");
    while (ok_) {
      std::string id = expect_ident("a host name");
      if (!ok_) return;
      goal.hosts.push_back({id, HostStatus::Available});
      if (peek().is_symbol(",")) {
        take();
        continue;
      }
      break;
    }
    expect_symbol("}");
  }

  void parse_constraintset(Goal& goal) {
    expect_keyword("constraintset");
    goal.name = expect_ident("a constraintset name");
    expect_symbol("=");
    expect_keyword("constraintset");
    expect_symbol("{");
    while (ok_ && !peek().is_symbol("}") && peek().kind != TokenKind::End)
      goal.clauses.push_back(parse_clause());
    expect_symbol("}");
  }

  ConstraintExpr parse_clause() {
    if (peek().is_keyword("forall") || peek().is_keyword("exists"))
      return parse_quantifier();
    return parse_atom_sequence();
  }

  ConstraintExpr parse_quantifier() {
    const Token& kw = take();
    ConstraintExpr expr;
    expr.line = kw.line;
    expr.col = kw.column;
    Quantifier q;
    q.universal = kw.text == "forall";
    if (peek().is_keyword("host")) {
      take();
      q.domain = DomainKind::Host;
    } else if (peek().kind == TokenKind::Ident) {
      q.domain = DomainKind::Instance;
      q.type_name = take().text;
    } else {
      fail("'host' or a component type name");
      return expr;
    }
    while (ok_) {
      q.vars.push_back(expect_ident("a variable name"));
      if (peek().is_symbol(",")) {
        take();
        continue;
      }
      break;
    }
    expect_keyword("in");
    if (peek().is_keyword("deployment")) {
      take();
      q.domain_ref = "deployment";
    } else if (peek().kind == TokenKind::Ident) {
      q.domain_ref = take().text;
    } else {
      fail("'deployment' or a host variable");
      return expr;
    }
    expect_symbol("(");
    while (ok_ && !peek().is_symbol(")") && peek().kind != TokenKind::End)
      q.body.push_back(parse_clause());
    if (ok_ && q.body.empty()) fail("at least one clause in quantifier body");
    expect_symbol(")");
    expr.node = std::move(q);
    return expr;
  }

  // atom ((or|and) atom)*, left-folded with same-operator flattening.
  ConstraintExpr parse_atom_sequence() {
    ConstraintExpr current = parse_atom();
    while (ok_ && (peek().is_keyword("or") || peek().is_keyword("and"))) {
      bool is_or = take().text == "or";
      ConstraintExpr rhs = parse_atom();
      if (is_or) {
        if (auto* d = std::get_if<Disjunction>(&current.node)) {
          d->terms.push_back(std::move(rhs));
          continue;
        }
        ConstraintExpr joined;
        joined.line = current.line;
        joined.col = current.col;
        Disjunction d;
        d.terms.push_back(std::move(current));
        d.terms.push_back(std::move(rhs));
        joined.node = std::move(d);
        current = std::move(joined);
      } else {
        if (auto* c = std::get_if<Conjunction>(&current.node)) {
          c->terms.push_back(std::move(rhs));
          continue;
        }
        ConstraintExpr joined;
        joined.line = current.line;
        joined.col = current.col;
        Conjunction c;
        c.terms.push_back(std::move(current));
        c.terms.push_back(std::move(rhs));
        joined.node = std::move(c);
        current = std::move(joined);
      }
    }
    return current;
  }

  std::optional<CompareOp> peek_compare_op() const {
    const Token& t = peek();
    if (t.kind != TokenKind::Symbol) return std::nullopt;
    if (t.text == "=") return CompareOp::Eq;
    if (t.text == "!=") return CompareOp::Ne;
    if (t.text == "<=") return CompareOp::Le;
    if (t.text == "<") return CompareOp::Lt;
    if (t.text == ">=") return CompareOp::Ge;
    if (t.text == ">") return CompareOp::Gt;
    return std::nullopt;
  }

  ConstraintExpr parse_atom() {
    ConstraintExpr expr;
    const Token& t = peek();
    expr.line = t.line;
    expr.col = t.column;

    if (t.kind == TokenKind::Int ||
        (t.kind == TokenKind::Ident && t.text == "card" && peek(1).is_symbol("("))) {
      Compare cmp;
      cmp.lhs = parse_int_expr();
      if (!ok_) return expr;
      auto op = peek_compare_op();
      if (!op) {
        fail("a comparison operator after an integer expression");
        return expr;
      }
      take();
      cmp.op = *op;
      cmp.rhs = parse_int_expr();
      expr.node = std::move(cmp);
      return expr;
    }

    if (t.kind == TokenKind::Ident && t.text == "reachable" &&
        peek(1).is_symbol("(")) {
      take();
      take();
      Reachable r;
      r.var_a = expect_ident("a variable name");
      expect_symbol(",");
      r.var_b = expect_ident("a variable name");
      expect_symbol(")");
      expr.node = std::move(r);
      return expr;
    }

    if (t.kind == TokenKind::Ident && peek(1).is_symbol(".")) {
      ConnectsTo c;
      c.var_a = take().text;
      take();  // '.'
      c.port_a = expect_port_name();
      expect_keyword("connectsto");
      c.var_b = expect_ident("a variable name");
      expect_symbol(".");
      c.port_b = expect_port_name();
      expr.node = std::move(c);
      return expr;
    }

    if (t.kind == TokenKind::Ident && peek(1).is_symbol("!=")) {
      NotEqualVars n;
      n.var_a = take().text;
      take();  // '!='
      n.var_b = expect_ident("a variable name");
      expr.node = std::move(n);
      return expr;
    }

    fail(
        "a constraint atom: card(...), reachable(v, v), v.port connectsto "
        "v.port, or v != v (other constraint types are extension points)");
    return expr;
  }

  IntExpr parse_int_expr() {
    IntExpr e;
    const Token& t = peek();
    e.line = t.line;
    e.col = t.column;
    if (t.kind == TokenKind::Int) {
      e.kind = IntExpr::Kind::Literal;
      long long value = 0;
      for (char c : take().text) {
        value = value * 10 + (c - '0');
        if (value > 1000000) {
          fail("an integer literal no larger than 1000000");
          return e;
        }
      }
      e.literal = static_cast<int>(value);
      return e;
    }
    if (t.kind == TokenKind::Ident && t.text == "card" && peek(1).is_symbol("(")) {
      take();
      take();
      if (peek().is_keyword("instancesof")) {
        take();
        e.kind = IntExpr::Kind::CardInstances;
        e.type_name = expect_ident("a component type name");
        expect_keyword("in");
        if (peek().is_keyword("deployment")) {
          take();
          e.scope_ref = "deployment";
        } else {
          e.scope_ref = expect_ident("'deployment' or a host variable");
        }
      } else {
        e.kind = IntExpr::Kind::CardConnected;
        e.type_name = expect_ident("a component type name");
        e.count_var = expect_ident("a variable name");
        expect_keyword("connectsto");
        e.target_var = expect_ident("a variable name");
      }
      expect_symbol(")");
      return e;
    }
    fail("an integer literal or card(...)");
    return e;
  }
};

inline void add_quantified_types(const ConstraintExpr& expr, Goal& goal) {
  struct Vis {
    Goal& goal;
    void operator()(const Quantifier& q) const {
      if (q.domain == DomainKind::Instance && !goal.find_type(q.type_name))
        goal.component_types.push_back({q.type_name, {}});
      for (const auto& term : q.body) add_quantified_types(term, goal);
    }
    void operator()(const Conjunction& c) const {
      for (const auto& t : c.terms) add_quantified_types(t, goal);
    }
    void operator()(const Disjunction& d) const {
      for (const auto& t : d.terms) add_quantified_types(t, goal);
    }
    void operator()(const Negation& n) const {
      for (const auto& t : n.term) add_quantified_types(t, goal);
    }
    void operator()(const Compare&) const {}
    void operator()(const ConnectsTo&) const {}
    void operator()(const Reachable&) const {}
    void operator()(const NotEqualVars&) const {}
  };
  std::visit(Vis{goal}, expr.node);
}

}  // namespace detail

/// Parses Deladas source into a Goal. Component types that appear only in
/// quantifiers are declared implicitly, then ports are inferred from
/// connectsto usage. On any error the goal is absent and diagnostics carry
/// positions.
inline ParseResult parse_goal(std::string_view source) {
  ParseResult result;
  LexResult lex = tokenize(source);
  result.diagnostics = lex.diagnostics;
  if (has_errors(result.diagnostics)) return result;

  detail::GoalParser parser(lex.tokens, result.diagnostics);
  std::optional<Goal> goal = parser.parse();
  if (!goal || has_errors(result.diagnostics)) return result;

  for (const auto& clause : goal->clauses)
    detail::add_quantified_types(clause, *goal);

  InferenceResult inferred = infer_ports(goal->clauses, goal->component_types);
  for (auto& d : inferred.diagnostics) result.diagnostics.push_back(d);
  goal->component_types = std::move(inferred.types);

  for (auto& d : validate_goal(*goal)) result.diagnostics.push_back(d);
  if (has_errors(result.diagnostics)) return result;

  result.goal = std::move(*goal);
  return result;
}

// ---------------------------------------------------------------------------
// Canonical pretty-printer (parse(print(g)) is structurally identical to g)
// ---------------------------------------------------------------------------

namespace detail {

inline std::string print_int_expr(const IntExpr& e) {
  switch (e.kind) {
    case IntExpr::Kind::Literal:
      return std::to_string(e.literal);
    case IntExpr::Kind::CardInstances:
      return "card(instancesof " + e.type_name + " in " + e.scope_ref + ")";
    case IntExpr::Kind::CardConnected:
      return "card(" + e.type_name + " " + e.count_var + " connectsto " +
             e.target_var + ")";
  }
  return {};
}

inline void print_clause(const ConstraintExpr& expr, std::ostringstream& out,
                         int indent);

inline std::string print_inline(const ConstraintExpr& expr) {
  struct Vis {
    std::string operator()(const Quantifier&) const { return "<quantifier>"; }
    std::string operator()(const Conjunction& c) const {
      std::string s;
      for (size_t i = 0; i < c.terms.size(); ++i) {
        if (i) s += " and ";
        s += print_inline(c.terms[i]);
      }
      return s;
    }
    std::string operator()(const Disjunction& d) const {
      std::string s;
      for (size_t i = 0; i < d.terms.size(); ++i) {
        if (i) s += " or ";
        s += print_inline(d.terms[i]);
      }
      return s;
    }
    std::string operator()(const Negation& n) const {
      return "not (" + (n.term.empty() ? "" : print_inline(n.term[0])) + ")";
    }
    std::string operator()(const Compare& c) const {
      return print_int_expr(c.lhs) + " " + to_string(c.op) + " " +
             print_int_expr(c.rhs);
    }
    std::string operator()(const ConnectsTo& c) const {
      return c.var_a + "." + c.port_a + " connectsto " + c.var_b + "." + c.port_b;
    }
    std::string operator()(const Reachable& r) const {
      return "reachable(" + r.var_a + ", " + r.var_b + ")";
    }
    std::string operator()(const NotEqualVars& n) const {
      return n.var_a + " != " + n.var_b;
    }
  };
  return std::visit(Vis{}, expr.node);
}

inline void print_clause(const ConstraintExpr& expr, std::ostringstream& out,
                         int indent) {
  std::string pad(static_cast<size_t>(indent) * 2, ' ');
  if (const auto* q = std::get_if<Quantifier>(&expr.node)) {
    out << pad << (q->universal ? "forall " : "exists ");
    if (q->domain == DomainKind::Host)
      out << "host";
    else
      out << q->type_name;
    out << " ";
    for (size_t i = 0; i < q->vars.size(); ++i) {
      if (i) out << ",";
      out << q->vars[i];
    }
    out << " in " << q->domain_ref << " (\n";
    for (const auto& term : q->body) print_clause(term, out, indent + 1);
    out << pad << ")\n";
    return;
  }
  out << pad << print_inline(expr) << "\n";
}

}  // namespace detail

inline std::string pretty_print(const Goal& goal) {
  std::ostringstream out;
  if (!goal.component_types.empty()) {
    out << "components {\n";
    for (const auto& t : goal.component_types) {
      out << "  " << t.name;
      if (!t.ports.empty()) {
        out << " { ";
        for (size_t i = 0; i < t.ports.size(); ++i) {
          if (i) out << ", ";
          out << t.ports[i].name << ": " << to_string(t.ports[i].direction);
        }
        out << " }";
      }
      out << "\n";
    }
    out << "}\n";
  }
  if (!goal.hosts.empty()) {
    out << "hosts { ";
    for (size_t i = 0; i < goal.hosts.size(); ++i) {
      if (i) out << ", ";
      out << goal.hosts[i].id;
    }
    out << " }\n";
  }
  out << "constraintset " << goal.name << " = constraintset {\n";
  for (const auto& clause : goal.clauses) detail::print_clause(clause, out, 1);
  out << "}\n";
  return out.str();
}

}  // namespace deladas
