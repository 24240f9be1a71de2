#ifndef REBIP_SEMANTICS_HPP
#define REBIP_SEMANTICS_HPP

#include "rebip/parse.hpp"

#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <unordered_map>

namespace rebip {

struct LocalConfig {
  std::string loc;
  Valuation vals;
  std::optional<std::string> last_port; // null until the first fired step

  auto tie() const { return std::tie(loc, vals, last_port); }
  bool operator==(const LocalConfig& o) const { return tie() == o.tie(); }
  bool operator<(const LocalConfig& o) const { return tie() < o.tie(); }
};

/// One local configuration per component, in component declaration order.
struct GlobalConfig {
  std::vector<LocalConfig> locals;

  bool operator==(const GlobalConfig& o) const { return locals == o.locals; }
  bool operator<(const GlobalConfig& o) const { return locals < o.locals; }
};

inline GlobalConfig initial_config(const System& sys) {
  GlobalConfig g;
  for (const auto& c : sys.components)
    g.locals.push_back(LocalConfig{c.initial, c.initial_valuation(), std::nullopt});
  return g;
}

/// Alternating configurations and interactions: configs.size() == steps.size()+1.
struct Run {
  std::vector<GlobalConfig> configs;
  std::vector<Interaction> steps;
};

// ---------------------------------------------------------------------------
// Enabledness
// ---------------------------------------------------------------------------

namespace detail {

inline const Transition* enabled_transition(const AtomicComponent& c, const LocalConfig& lc,
                                            const std::string& port) {
  for (const auto& t : c.transitions)
    if (t.src == lc.loc && t.port == port && eval_expr(t.guard, lc.vals).as_bool())
      return &t;
  return nullptr;
}

/// Connector scope: for each participating port, its attached variables under
/// both "comp.var" and "comp.port.var" names.
inline Valuation connector_scope(const System& sys, const GlobalConfig& g,
                                 const std::vector<std::string>& ports) {
  Valuation scope;
  for (const auto& pr : ports) {
    auto ref = parse_port_ref(pr);
    int ci = sys.component_index(ref.owner);
    const AtomicComponent& comp = sys.components[ci];
    const Port* port = comp.find_port(ref.port);
    for (const auto& x : port->vars) {
      const Value& v = g.locals[ci].vals.at(x);
      scope[ref.owner + "." + x] = v;
      scope[ref.owner + "." + ref.port + "." + x] = v;
    }
  }
  return scope;
}

struct TransferTarget {
  int component;
  std::string var;
};

inline TransferTarget resolve_transfer_target(const System& sys, const std::string& target) {
  auto first = target.find('.');
  if (first == std::string::npos)
    throw ModelError("transfer target '" + target + "' must be qualified");
  std::string comp = target.substr(0, first);
  std::string rest = target.substr(first + 1);
  int ci = sys.component_index(comp);
  if (ci < 0) throw ModelError("transfer target '" + target + "' names unknown component");
  const AtomicComponent& c = sys.components[ci];
  if (c.has_var(rest)) return {ci, rest};
  auto second = rest.find('.');
  if (second != std::string::npos) {
    std::string var = rest.substr(second + 1);
    if (c.has_var(var)) return {ci, var};
  }
  throw ModelError("transfer target '" + target + "' names unknown variable");
}

inline bool interaction_transitions_enabled(const System& sys, const GlobalConfig& g,
                                            const Interaction& a) {
  for (const auto& pr : a.ports) {
    auto ref = parse_port_ref(pr);
    int ci = sys.component_index(ref.owner);
    if (ci < 0 || !enabled_transition(sys.components[ci], g.locals[ci], ref.port)) return false;
  }
  return true;
}

inline bool interaction_guard_holds(const System& sys, const GlobalConfig& g, const Connector& c,
                                    const Interaction& a) {
  if (is_literal_true(c.guard)) return true;
  return eval_expr(c.guard, connector_scope(sys, g, a.ports)).as_bool();
}

/// Maximal-enabled shortcut: when every guard along a connector (and its
/// sub-connectors) is literally true, any enabled interaction is a subset of
/// the maximal enabled one, so maximal progress leaves exactly that maximal
/// interaction. Skips exponential subset enumeration. Not applicable when a
/// fine-grained priority entry could reverse the subset ordering.
inline bool shortcut_applicable(const System& sys, const Connector& c) {
  if (!is_literal_true(c.guard)) return false;
  for (const auto& p : c.ports) {
    const Connector* lower = sys.find_connector(p.owner);
    if (lower && !shortcut_applicable(sys, *lower)) return false;
  }
  for (const auto& [lo, hi] : sys.priorities.pairs)
    for (const auto& ref : {lo, hi})
      if (ref.find(':') != std::string::npos && priority_ref_connector(ref) == c.name)
        return false;
  return true;
}

/// Compute the maximal enabled interaction of a guardless connector, through
/// any hierarchy. Returns false when the connector cannot fire at all.
inline bool maximal_enabled(const System& sys, const GlobalConfig& g, const Connector& c,
                            std::vector<std::string>& out_ports) {
  bool has_triggers = !c.triggers.empty();
  bool any_included_trigger = false;
  std::vector<std::string> included;
  for (const auto& p : c.ports) {
    const Connector* lower = sys.find_connector(p.owner);
    bool avail;
    std::vector<std::string> sub;
    if (lower && lower->export_id && *lower->export_id == p.port) {
      avail = maximal_enabled(sys, g, *lower, sub);
    } else {
      int ci = sys.component_index(p.owner);
      avail = ci >= 0 && enabled_transition(sys.components[ci], g.locals[ci], p.port);
      sub.push_back(p.str());
    }
    if (avail) {
      included.insert(included.end(), sub.begin(), sub.end());
      any_included_trigger |= c.is_trigger(p);
    } else if (!has_triggers) {
      return false; // rendezvous needs every member
    }
    // in a trigger connector a disabled member simply stays out
  }
  if (has_triggers && !any_included_trigger) return false;
  std::sort(included.begin(), included.end());
  for (const auto& req : c.required)
    if (!std::binary_search(included.begin(), included.end(), req)) return false;
  out_ports = std::move(included);
  return !out_ports.empty();
}

inline std::vector<Interaction> enabled_of_connector(const System& sys, const GlobalConfig& g,
                                                     const Connector& c,
                                                     const bool* shortcut_hint = nullptr) {
  std::vector<Interaction> out;
  if (shortcut_hint ? *shortcut_hint : shortcut_applicable(sys, c)) {
    Interaction a;
    a.connector = c.name;
    if (maximal_enabled(sys, g, c, a.ports)) out.push_back(std::move(a));
    return out;
  }
  for (auto& a : feasible_interactions(sys, c))
    if (interaction_transitions_enabled(sys, g, a) && interaction_guard_holds(sys, g, c, a))
      out.push_back(std::move(a));
  return out;
}

/// Interaction-level strict priority: declared connector (or fine-grained)
/// pairs, transitively closed, plus maximal progress inside each connector
/// unless a declared pair reverses the specific subset relation.
class PriorityOrder {
 public:
  explicit PriorityOrder(const System& sys) {
    // the shortcut decision is static per connector; cache it so the
    // per-step enabled-set computation does not rescan the priority pairs
    for (const auto& c : sys.connectors) shortcut_[c.name] = shortcut_applicable(sys, c);
    for (const auto& [lo, hi] : sys.priorities.pairs) closure_[lo].insert(hi);
    // transitive closure over declared refs (connector names and fine ids)
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto& [lo, his] : closure_) {
        std::set<std::string> add;
        for (const auto& mid : his) {
          auto it = closure_.find(mid);
          if (it == closure_.end()) continue;
          for (const auto& hi : it->second)
            if (!his.count(hi)) add.insert(hi);
        }
        if (!add.empty()) {
          his.insert(add.begin(), add.end());
          changed = true;
        }
      }
    }
  }

  bool lower_than(const Interaction& a, const Interaction& b) const {
    for (const auto& lo : refs_of(a)) {
      auto it = closure_.find(lo);
      if (it == closure_.end()) continue;
      for (const auto& hi : it->second)
        if (matches(b, hi)) return true;
    }
    if (a.connector == b.connector && a.ports != b.ports &&
        std::includes(b.ports.begin(), b.ports.end(), a.ports.begin(), a.ports.end()) &&
        !declared(b, a))
      return true;
    return false;
  }

  /// Drop every interaction with a strictly higher enabled one. Declared
  /// priorities are resolved through enabled-ref lookups rather than by
  /// comparing all pairs, so large systems pay per interaction, not squared.
  std::vector<Interaction> filter(const std::vector<Interaction>& raw) const {
    std::map<std::string, int> conn_count;
    std::set<std::string> ids;
    for (const auto& a : raw) {
      ++conn_count[a.connector];
      ids.insert(a.id());
    }
    auto higher_enabled = [&](const Interaction& a) {
      for (const auto& lo : refs_of(a)) {
        auto it = closure_.find(lo);
        if (it == closure_.end()) continue;
        for (const auto& hi : it->second) {
          if (ids.count(hi) && hi != a.id()) return true;
          auto cc = conn_count.find(hi);
          if (cc != conn_count.end() && cc->second - (hi == a.connector ? 1 : 0) > 0)
            return true;
        }
      }
      return false;
    };
    std::vector<Interaction> out;
    for (const auto& a : raw) {
      if (higher_enabled(a)) continue;
      bool suppressed = false;
      if (conn_count[a.connector] > 1) // maximal progress needs a same-connector look
        for (const auto& b : raw)
          if (!(a == b) && lower_than(a, b)) {
            suppressed = true;
            break;
          }
      if (!suppressed) out.push_back(a);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  const bool* shortcut_hint(const std::string& connector) const {
    auto it = shortcut_.find(connector);
    return it == shortcut_.end() ? nullptr : &it->second;
  }

 private:
  static bool matches(const Interaction& a, const std::string& ref) {
    return ref == a.connector || ref == a.id();
  }
  static std::vector<std::string> refs_of(const Interaction& a) {
    return {a.connector, a.id()};
  }
  bool declared(const Interaction& lo, const Interaction& hi) const {
    for (const auto& l : refs_of(lo)) {
      auto it = closure_.find(l);
      if (it == closure_.end()) continue;
      for (const auto& h : it->second)
        if (matches(hi, h)) return true;
    }
    return false;
  }

  std::map<std::string, std::set<std::string>> closure_;
  std::unordered_map<std::string, bool> shortcut_;
};

} // namespace detail

/// All interactions enabled at g after priority filtering (a is suppressed
/// when some enabled b has strictly higher priority or supersedes it under
/// maximal progress). Callers stepping many times should reuse a
/// PriorityOrder built once.
inline std::vector<Interaction> enabled_interactions(const System& sys, const GlobalConfig& g,
                                                     const detail::PriorityOrder& order) {
  std::vector<Interaction> raw;
  for (const auto& c : sys.connectors) {
    if (c.export_id) continue; // fired only through the exporting connector
    auto part = detail::enabled_of_connector(sys, g, c, order.shortcut_hint(c.name));
    raw.insert(raw.end(), part.begin(), part.end());
  }
  return order.filter(raw);
}

inline std::vector<Interaction> enabled_interactions(const System& sys, const GlobalConfig& g) {
  return enabled_interactions(sys, g, detail::PriorityOrder(sys));
}

/// Fire one interaction: data transfer first (all right-hand sides read
/// pre-interaction values, writes land in listed order), then every involved
/// component takes its enabled transition over the transferred valuation.
inline GlobalConfig apply_interaction(const System& sys, const GlobalConfig& g,
                                      const Interaction& a) {
  const Connector* conn = sys.find_connector(a.connector);
  if (!conn) throw ModelError("unknown connector '" + a.connector + "'");

  // pick transitions before transfer: guards are judged on pre-values
  std::vector<std::pair<int, const Transition*>> fired;
  for (const auto& pr : a.ports) {
    auto ref = parse_port_ref(pr);
    int ci = sys.component_index(ref.owner);
    const Transition* t = detail::enabled_transition(sys.components[ci], g.locals[ci], ref.port);
    if (!t) throw ModelError("interaction " + a.id() + " is not enabled");
    fired.emplace_back(ci, t);
  }

  GlobalConfig next = g;
  if (!conn->transfer.empty()) {
    Valuation scope = detail::connector_scope(sys, g, a.ports);
    std::vector<std::pair<detail::TransferTarget, Value>> writes;
    for (const auto& asg : conn->transfer) {
      // assignments reading data of ports absent from this (partial)
      // interaction do not apply
      std::set<std::string> reads;
      collect_vars(asg.rhs, reads);
      bool applicable = true;
      for (const auto& r : reads) applicable &= scope.count(r) > 0;
      if (!applicable) continue;
      writes.emplace_back(detail::resolve_transfer_target(sys, asg.target),
                          eval_expr(asg.rhs, scope));
    }
    for (auto& [tgt, v] : writes) next.locals[tgt.component].vals[tgt.var] = std::move(v);
  }

  for (auto& [ci, t] : fired) {
    LocalConfig& lc = next.locals[ci];
    for (const auto& asg : t->func) lc.vals[asg.target] = eval_expr(asg.rhs, lc.vals);
    lc.loc = t->dest;
    lc.last_port = t->port;
  }
  return next;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

enum class Terminal { None, Deadlock, MaxSteps, Stopped };

inline std::string terminal_name(Terminal t) {
  switch (t) {
    case Terminal::Deadlock: return "deadlock";
    case Terminal::MaxSteps: return "max_steps";
    case Terminal::Stopped: return "stopped";
    default: return "";
  }
}

/// Scheduling policy: picks one of the enabled interactions.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual const Interaction& choose(const std::vector<Interaction>& enabled) = 0;
};

class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(uint64_t seed) : rng_(seed) {}
  const Interaction& choose(const std::vector<Interaction>& enabled) override {
    std::uniform_int_distribution<size_t> d(0, enabled.size() - 1);
    return enabled[d(rng_)];
  }

 private:
  std::mt19937_64 rng_;
};

/// Deterministic policy: smallest interaction id first.
class LexPolicy : public Policy {
 public:
  const Interaction& choose(const std::vector<Interaction>& enabled) override {
    return enabled.front(); // enabled_interactions returns a sorted vector
  }
};

struct SimResult {
  Run run;
  Terminal terminal = Terminal::None;
};

/// Run up to max_steps interactions. `stop` (optional) is consulted after
/// every step and ends the run with Terminal::Stopped when it returns true.
inline SimResult simulate(const System& sys, Policy& policy, size_t max_steps,
                          const std::function<bool(const Run&)>& stop = {}) {
  SimResult res;
  detail::PriorityOrder order(sys);
  res.run.configs.push_back(initial_config(sys));
  for (size_t k = 0; k < max_steps; ++k) {
    auto enabled = enabled_interactions(sys, res.run.configs.back(), order);
    if (enabled.empty()) {
      res.terminal = Terminal::Deadlock;
      return res;
    }
    const Interaction& a = policy.choose(enabled);
    res.run.configs.push_back(apply_interaction(sys, res.run.configs.back(), a));
    res.run.steps.push_back(a);
    if (stop && stop(res.run)) {
      res.terminal = Terminal::Stopped;
      return res;
    }
  }
  res.terminal = Terminal::MaxSteps;
  return res;
}

// ---------------------------------------------------------------------------
// Exploration
// ---------------------------------------------------------------------------

struct ExploreResult {
  std::set<GlobalConfig> reachable;
  std::set<GlobalConfig> deadlocks;
  std::map<GlobalConfig, size_t> depth; // BFS distance from the initial configuration
  bool truncated = false;
};

/// BFS over the priority-filtered transition relation, up to `bound` states
/// (0 = unbounded).
inline ExploreResult explore(const System& sys, size_t bound = 0) {
  ExploreResult res;
  detail::PriorityOrder order(sys);
  std::deque<GlobalConfig> frontier;
  GlobalConfig g0 = initial_config(sys);
  res.reachable.insert(g0);
  res.depth[g0] = 0;
  frontier.push_back(g0);
  while (!frontier.empty()) {
    GlobalConfig g = std::move(frontier.front());
    frontier.pop_front();
    auto enabled = enabled_interactions(sys, g, order);
    if (enabled.empty()) res.deadlocks.insert(g);
    for (const auto& a : enabled) {
      GlobalConfig n = apply_interaction(sys, g, a);
      if (res.reachable.count(n)) continue;
      if (bound && res.reachable.size() >= bound) {
        res.truncated = true;
        return res;
      }
      res.depth[n] = res.depth[g] + 1;
      res.reachable.insert(n);
      frontier.push_back(n);
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Trace serialization
// ---------------------------------------------------------------------------

inline json config_to_json(const System& sys, const GlobalConfig& g) {
  json j = json::object();
  for (size_t i = 0; i < sys.components.size(); ++i) {
    json c;
    c["loc"] = g.locals[i].loc;
    c["last_port"] = g.locals[i].last_port ? json(*g.locals[i].last_port) : json(nullptr);
    c["vars"] = json::object();
    for (const auto& [n, v] : g.locals[i].vals) c["vars"][n] = value_to_json(v);
    j[sys.components[i].name] = std::move(c);
  }
  return j;
}

/// One JSON-lines record per fired step; the final record repeats the last
/// step with the terminal reason set.
inline void write_trace(std::ostream& out, const System& sys, const SimResult& res) {
  for (size_t k = 0; k < res.run.steps.size(); ++k) {
    json rec;
    rec["step"] = k + 1;
    rec["interaction"] = res.run.steps[k].ports;
    rec["config"] = config_to_json(sys, res.run.configs[k + 1]);
    bool last = (k + 1 == res.run.steps.size());
    rec["terminal"] =
        last && res.terminal != Terminal::None ? json(terminal_name(res.terminal)) : json(nullptr);
    out << rec.dump() << "\n";
  }
  if (res.run.steps.empty()) {
    json rec;
    rec["step"] = 0;
    rec["interaction"] = json::array();
    rec["config"] = config_to_json(sys, res.run.configs.front());
    rec["terminal"] = res.terminal != Terminal::None ? json(terminal_name(res.terminal)) : json(nullptr);
    out << rec.dump() << "\n";
  }
}

} // namespace rebip

#endif
