#ifndef REBIP_MODEL_HPP
#define REBIP_MODEL_HPP

#include "rebip/expr.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace rebip {

struct Port {
  std::string name;
  std::vector<std::string> vars; // attached local variables, ordered
};

struct Transition {
  std::string src;
  std::string port;
  ExprPtr guard; // never null; defaults to true
  std::vector<Assignment> func;
  std::string dest;
};

struct AtomicComponent {
  std::string name;
  std::vector<std::pair<std::string, Value>> variables;
  std::vector<Port> ports;
  std::vector<std::string> locations;
  std::string initial;
  std::vector<Transition> transitions;

  const Port* find_port(const std::string& p) const {
    for (const auto& q : ports)
      if (q.name == p) return &q;
    return nullptr;
  }
  bool has_var(const std::string& x) const {
    for (const auto& [n, v] : variables)
      if (n == x) return true;
    return false;
  }
  bool has_location(const std::string& l) const {
    return std::find(locations.begin(), locations.end(), l) != locations.end();
  }
  Valuation initial_valuation() const {
    Valuation v;
    for (const auto& [n, val] : variables) v[n] = val;
    return v;
  }
};

/// A connector endpoint: "component.port", or "connector.exportId" when the
/// connector is hierarchical and references a lower connector's exported port.
struct PortRef {
  std::string owner; // component or connector name
  std::string port;

  std::string str() const { return owner + "." + port; }
  bool operator<(const PortRef& o) const {
    return owner < o.owner || (owner == o.owner && port < o.port);
  }
  bool operator==(const PortRef& o) const { return owner == o.owner && port == o.port; }
};

inline PortRef parse_port_ref(const std::string& s) {
  auto pos = s.find('.');
  if (pos == std::string::npos || pos == 0 || pos + 1 >= s.size())
    throw ParseError("bad port reference '" + s + "' (expected owner.port)");
  return PortRef{s.substr(0, pos), s.substr(pos + 1)};
}

struct Connector {
  std::string name;
  std::vector<PortRef> ports;
  std::set<std::string> triggers; // port-ref strings flagged trigger
  ExprPtr guard;                  // over attached variables of its ports
  std::vector<Assignment> transfer;
  std::optional<std::string> export_id;
  // Ports that must take part in every fired interaction of this connector
  // (beyond trigger/synchron feasibility). Used by the monitor connector.
  std::vector<std::string> required;

  bool is_trigger(const PortRef& p) const { return triggers.count(p.str()) > 0; }
};

/// Priority pairs at connector granularity ("conn" names) with optional
/// fine-grained entries of the form "conn:{comp.port,comp.port}".
struct PriorityModel {
  std::vector<std::pair<std::string, std::string>> pairs; // (low, high)
};

struct System {
  std::vector<AtomicComponent> components;
  std::vector<Connector> connectors;
  PriorityModel priorities;

  const AtomicComponent* find_component(const std::string& n) const {
    int i = component_index(n);
    return i < 0 ? nullptr : &components[i];
  }
  int component_index(const std::string& n) const {
    // interpreter-hot lookup; the cache keys on size so that push_backs while
    // a model is being built or transformed invalidate it
    if (comp_cache_.size() != components.size()) {
      comp_cache_.clear();
      for (size_t i = 0; i < components.size(); ++i)
        comp_cache_[components[i].name] = static_cast<int>(i);
    }
    auto it = comp_cache_.find(n);
    return it == comp_cache_.end() ? -1 : it->second;
  }
  const Connector* find_connector(const std::string& n) const {
    if (conn_cache_.size() != connectors.size()) {
      conn_cache_.clear();
      for (size_t i = 0; i < connectors.size(); ++i)
        conn_cache_[connectors[i].name] = i;
    }
    auto it = conn_cache_.find(n);
    return it == conn_cache_.end() ? nullptr : &connectors[it->second];
  }

 private:
  mutable std::unordered_map<std::string, int> comp_cache_;
  mutable std::unordered_map<std::string, size_t> conn_cache_;
};

// ---------------------------------------------------------------------------
// Interactions
// ---------------------------------------------------------------------------

/// A feasible interaction: a connector name plus the flattened, sorted set of
/// component ports fired jointly. The projected guard and transfer follow
/// from the connector (see interaction_guard / interaction_transfer).
struct Interaction {
  std::string connector;
  std::vector<std::string> ports; // sorted "comp.port" strings

  std::string id() const {
    std::string s = connector + ":{";
    for (size_t i = 0; i < ports.size(); ++i) {
      if (i) s += ",";
      s += ports[i];
    }
    return s + "}";
  }
  bool contains(const std::string& port_ref) const {
    return std::binary_search(ports.begin(), ports.end(), port_ref);
  }
  bool operator==(const Interaction& o) const {
    return connector == o.connector && ports == o.ports;
  }
  bool operator<(const Interaction& o) const {
    return connector < o.connector || (connector == o.connector && ports < o.ports);
  }
};

namespace detail {

/// Expand one connector into its feasible port subsets, flattening
/// hierarchical references. Exponential in the number of trigger ports;
/// callers must bound connector size (validate_model rejects > 16 ports
/// on guarded connectors; the semantics layer short-cuts the rest).
inline void feasible_port_sets(const System& sys, const Connector& c,
                               std::vector<std::vector<PortRef>>& out) {
  const size_t n = c.ports.size();
  if (n == 0) return;
  bool any_trigger = false;
  for (const auto& p : c.ports) any_trigger |= c.is_trigger(p);

  std::vector<std::vector<PortRef>> raw;
  if (!any_trigger) {
    raw.push_back(c.ports); // only the maximal interaction
  } else {
    if (n > 20) throw ModelError("connector '" + c.name + "' too large to enumerate");
    for (uint64_t mask = 1; mask < (uint64_t{1} << n); ++mask) {
      bool has_trigger = false;
      std::vector<PortRef> sub;
      for (size_t i = 0; i < n; ++i) {
        if (mask & (uint64_t{1} << i)) {
          sub.push_back(c.ports[i]);
          has_trigger |= c.is_trigger(c.ports[i]);
        }
      }
      if (has_trigger) raw.push_back(std::move(sub));
    }
  }

  // Required ports must be present in every fired interaction.
  for (auto it = raw.begin(); it != raw.end();) {
    bool ok = true;
    for (const auto& req : c.required) {
      bool found = false;
      for (const auto& p : *it) found |= (p.str() == req);
      ok &= found;
    }
    it = ok ? it + 1 : raw.erase(it);
  }

  // Flatten hierarchical references: a member naming another connector's
  // exported port is replaced by each feasible interaction of that connector.
  for (auto& sub : raw) {
    std::vector<std::vector<std::string>> parts{{}};
    for (const auto& p : sub) {
      const Connector* lower = sys.find_connector(p.owner);
      if (lower && lower->export_id && *lower->export_id == p.port) {
        std::vector<std::vector<PortRef>> lower_sets;
        feasible_port_sets(sys, *lower, lower_sets);
        std::vector<std::vector<std::string>> next;
        for (const auto& base : parts)
          for (const auto& ls : lower_sets) {
            auto ext = base;
            for (const auto& lp : ls) ext.push_back(lp.str());
            next.push_back(std::move(ext));
          }
        parts = std::move(next);
      } else {
        for (auto& base : parts) base.push_back(p.str());
      }
    }
    for (auto& flat : parts) {
      std::vector<PortRef> refs;
      for (const auto& s : flat) refs.push_back(parse_port_ref(s));
      std::sort(refs.begin(), refs.end());
      out.push_back(std::move(refs));
    }
  }
}

} // namespace detail

/// All feasible interactions of a connector (Def. "Interaction"), flattened
/// through any hierarchy.
inline std::vector<Interaction> feasible_interactions(const System& sys, const Connector& c) {
  std::vector<std::vector<PortRef>> sets;
  detail::feasible_port_sets(sys, c, sets);
  std::set<Interaction> uniq;
  for (const auto& s : sets) {
    Interaction a;
    a.connector = c.name;
    for (const auto& p : s) a.ports.push_back(p.str());
    std::sort(a.ports.begin(), a.ports.end());
    uniq.insert(std::move(a));
  }
  return {uniq.begin(), uniq.end()};
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace detail {

inline bool priority_graph_has_cycle(const System& sys) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& [lo, hi] : sys.priorities.pairs) adj[lo].push_back(hi);
  std::map<std::string, int> state; // 0 unseen, 1 on stack, 2 done
  std::vector<std::string> stack;
  auto dfs = [&](auto&& self, const std::string& n) -> bool {
    state[n] = 1;
    for (const auto& m : adj[n]) {
      if (state[m] == 1) return true;
      if (state[m] == 0 && self(self, m)) return true;
    }
    state[n] = 2;
    return false;
  };
  for (const auto& [n, _] : adj)
    if (state[n] == 0 && dfs(dfs, n)) return true;
  return false;
}

inline std::string priority_ref_connector(const std::string& ref) {
  auto pos = ref.find(':');
  return pos == std::string::npos ? ref : ref.substr(0, pos);
}

} // namespace detail

inline std::vector<std::string> validate_model(const System& sys) {
  std::vector<std::string> diags;
  auto report = [&](std::string msg) { diags.push_back(std::move(msg)); };

  if (sys.components.empty()) report("system must contain at least one component");

  std::set<std::string> comp_names;
  for (const auto& c : sys.components) {
    if (!comp_names.insert(c.name).second) report("duplicate component name '" + c.name + "'");
    std::set<std::string> vars;
    for (const auto& [n, v] : c.variables)
      if (!vars.insert(n).second)
        report("duplicate variable '" + n + "' in component '" + c.name + "'");
    std::set<std::string> port_names;
    for (const auto& p : c.ports) {
      if (!port_names.insert(p.name).second)
        report("duplicate port '" + p.name + "' in component '" + c.name + "'");
      for (const auto& x : p.vars)
        if (!vars.count(x))
          report("port '" + c.name + "." + p.name + "' attaches unknown variable '" + x + "'");
    }
    std::set<std::string> locs(c.locations.begin(), c.locations.end());
    if (locs.size() != c.locations.size())
      report("duplicate location in component '" + c.name + "'");
    if (!locs.count(c.initial))
      report("initial location '" + c.initial + "' not declared in component '" + c.name + "'");
    for (const auto& t : c.transitions) {
      if (!locs.count(t.src))
        report("transition source '" + t.src + "' not a location of '" + c.name + "'");
      if (!locs.count(t.dest))
        report("transition destination '" + t.dest + "' not a location of '" + c.name + "'");
      if (!port_names.count(t.port))
        report("transition port '" + t.port + "' not a port of '" + c.name + "'");
      std::set<std::string> used;
      collect_vars(t.guard, used);
      for (const auto& a : t.func) {
        if (!vars.count(a.target))
          report("assignment target '" + a.target + "' not a variable of '" + c.name + "'");
        collect_vars(a.rhs, used);
      }
      for (const auto& x : used)
        if (!vars.count(x))
          report("guard/update of '" + c.name + "' references unknown variable '" + x + "'");
    }
  }

  std::set<std::string> conn_names;
  for (const auto& c : sys.connectors) {
    if (comp_names.count(c.name) || !conn_names.insert(c.name).second)
      report("duplicate or clashing connector name '" + c.name + "'");
  }
  for (const auto& c : sys.connectors) {
    std::set<std::string> owners;
    for (const auto& p : c.ports) {
      const AtomicComponent* comp = sys.find_component(p.owner);
      if (comp) {
        if (!comp->find_port(p.port))
          report("connector '" + c.name + "' references unknown port '" + p.str() + "'");
        if (!owners.insert(p.owner).second)
          report("connector '" + c.name + "' has two ports of component '" + p.owner +
                 "' (one port per component)");
      } else {
        const Connector* lower = sys.find_connector(p.owner);
        if (!lower || !lower->export_id || *lower->export_id != p.port)
          report("connector '" + c.name + "' references unknown port '" + p.str() + "'");
        else if (lower->name == c.name)
          report("connector '" + c.name + "' references its own export");
      }
    }
    for (const auto& t : c.triggers) {
      bool found = false;
      for (const auto& p : c.ports) found |= (p.str() == t);
      if (!found) report("connector '" + c.name + "' flags unknown trigger '" + t + "'");
    }
    if (!is_literal_true(c.guard) && c.ports.size() > 16)
      report("connector '" + c.name + "' is too large for a non-trivial guard");
  }

  // Hierarchy must be a DAG.
  {
    std::map<std::string, int> state;
    auto dfs = [&](auto&& self, const Connector& c) -> bool {
      state[c.name] = 1;
      for (const auto& p : c.ports) {
        const Connector* lower = sys.find_connector(p.owner);
        if (!lower) continue;
        if (state[lower->name] == 1) return true;
        if (state[lower->name] == 0 && self(self, *lower)) return true;
      }
      state[c.name] = 2;
      return false;
    };
    for (const auto& c : sys.connectors)
      if (state[c.name] == 0 && dfs(dfs, c)) {
        report("connector hierarchy contains a cycle");
        break;
      }
  }

  for (const auto& [lo, hi] : sys.priorities.pairs) {
    if (lo == hi) report("priority pair (" + lo + "," + hi + ") is reflexive");
    for (const auto& ref : {lo, hi})
      if (!sys.find_connector(detail::priority_ref_connector(ref)))
        report("priority pair references unknown connector '" +
               detail::priority_ref_connector(ref) + "'");
  }
  if (detail::priority_graph_has_cycle(sys)) report("priority relation contains a cycle");

  return diags;
}

/// Throws ModelError unless the system validates cleanly.
inline void require_valid(const System& sys) {
  auto diags = validate_model(sys);
  if (!diags.empty()) {
    std::string msg = "invalid model:";
    for (const auto& d : diags) msg += "\n  " + d;
    throw ModelError(msg);
  }
}

} // namespace rebip

#endif
