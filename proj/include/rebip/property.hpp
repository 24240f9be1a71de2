#ifndef REBIP_PROPERTY_HPP
#define REBIP_PROPERTY_HPP

#include "rebip/semantics.hpp"

namespace rebip {

struct OracleError : std::runtime_error {
  explicit OracleError(const std::string& m) : std::runtime_error(m) {}
};

// ---------------------------------------------------------------------------
// Events over configurations
// ---------------------------------------------------------------------------

/// Marker for "no port fired yet"; the instrumentation uses the same marker
/// for its shadow port variables.
inline const std::string kNullPort = "null";

/// Valuation an event formula is judged against: every component variable as
/// "comp.x", plus the virtual "comp.loc" and "comp.port" observables.
inline Valuation event_valuation(const System& sys, const GlobalConfig& g) {
  Valuation v;
  for (size_t i = 0; i < sys.components.size(); ++i) {
    const auto& comp = sys.components[i];
    const auto& lc = g.locals[i];
    for (const auto& [n, val] : lc.vals) v[comp.name + "." + n] = val;
    v[comp.name + ".loc"] = Value(lc.loc);
    v[comp.name + ".port"] = Value(lc.last_port ? *lc.last_port : kNullPort);
  }
  return v;
}

/// An oracle event: a Boolean formula over qualified observables, kept with
/// its source text so structurally identical events compare as one letter.
struct Event {
  std::string text;
  ExprPtr expr;

  bool operator==(const Event& o) const { return text == o.text; }
  bool operator<(const Event& o) const { return text < o.text; }
};

inline Event parse_event(const std::string& src) { return Event{src, parse_expr(src)}; }

inline bool eval_event(const Event& e, const System& sys, const GlobalConfig& g) {
  return eval_expr(e.expr, event_valuation(sys, g)).as_bool();
}

/// What the events of an oracle observe, per component.
struct MonitorUse {
  std::map<std::string, std::set<std::string>> vars; // comp -> plain var names
  std::set<std::string> locs;                        // comps whose location is observed
  std::set<std::string> ports;                       // comps whose fired port is observed

  bool observes(const std::string& comp) const {
    return vars.count(comp) || locs.count(comp) || ports.count(comp);
  }
  std::set<std::string> components() const {
    std::set<std::string> out;
    for (const auto& [c, _] : vars) out.insert(c);
    out.insert(locs.begin(), locs.end());
    out.insert(ports.begin(), ports.end());
    return out;
  }
};

// ---------------------------------------------------------------------------
// Runtime oracles
// ---------------------------------------------------------------------------

enum class Verdict { Top, TopC, BotC, Bot };

inline std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Top: return "top";
    case Verdict::TopC: return "topc";
    case Verdict::BotC: return "botc";
    default: return "bot";
  }
}

inline Verdict verdict_from_name(const std::string& s) {
  if (s == "top") return Verdict::Top;
  if (s == "topc") return Verdict::TopC;
  if (s == "botc") return Verdict::BotC;
  if (s == "bot") return Verdict::Bot;
  throw ParseError("unknown verdict '" + s + "'");
}

inline bool good_verdict(Verdict v) { return v == Verdict::Top || v == Verdict::TopC; }

struct OracleState {
  std::string name;
  std::optional<Verdict> verdict;  // explicit, or derived from `accepting`
  std::optional<bool> accepting;
};

struct OracleTransition {
  std::string from;
  Event event;
  std::string to;
  std::optional<std::string> output; // "bad" | "possiblyGood"
};

struct Oracle {
  std::vector<OracleState> states;
  std::string initial;
  std::vector<OracleTransition> transitions;

  int state_index(const std::string& n) const {
    for (size_t i = 0; i < states.size(); ++i)
      if (states[i].name == n) return static_cast<int>(i);
    return -1;
  }
  std::vector<const OracleTransition*> outgoing(const std::string& from) const {
    std::vector<const OracleTransition*> out;
    for (const auto& t : transitions)
      if (t.from == from) out.push_back(&t);
    return out;
  }
  std::vector<Event> alphabet() const {
    std::set<Event> letters;
    for (const auto& t : transitions) letters.insert(t.event);
    return {letters.begin(), letters.end()};
  }
};

inline std::vector<std::string> validate_oracle(const Oracle& o) {
  std::vector<std::string> diags;
  std::set<std::string> names;
  for (const auto& s : o.states) {
    if (!names.insert(s.name).second) diags.push_back("duplicate oracle state '" + s.name + "'");
    if (!s.verdict && !s.accepting)
      diags.push_back("oracle state '" + s.name + "' needs a verdict or an accepting flag");
  }
  if (!names.count(o.initial)) diags.push_back("initial oracle state '" + o.initial + "' unknown");
  for (const auto& t : o.transitions) {
    if (!names.count(t.from)) diags.push_back("oracle transition from unknown state '" + t.from + "'");
    if (!names.count(t.to)) diags.push_back("oracle transition to unknown state '" + t.to + "'");
    if (t.output && *t.output != "bad" && *t.output != "possiblyGood")
      diags.push_back("oracle output must be 'bad' or 'possiblyGood', got '" + *t.output + "'");
    std::set<std::string> used;
    collect_vars(t.event.expr, used);
    if (used.empty())
      diags.push_back("oracle event '" + t.event.text + "' uses no atomic proposition");
  }
  return diags;
}

/// Syntactic tautology check used only to warn (events like `e || !e`).
inline bool syntactically_tautological(const Event& e) {
  const Expr* x = e.expr.get();
  if (x->kind == Expr::Kind::Lit) return x->lit.is_bool() && x->lit.as_bool();
  if (x->kind == Expr::Kind::Binary && x->bin == BinOp::Or) {
    auto neg_of = [](const ExprPtr& a, const ExprPtr& b) {
      return b->kind == Expr::Kind::Unary && b->un == UnOp::Not &&
             expr_to_string(b->lhs) == expr_to_string(a);
    };
    return neg_of(x->lhs, x->rhs) || neg_of(x->rhs, x->lhs);
  }
  return false;
}

/// Classify which observables each oracle event reads, against a system.
inline MonitorUse monitored_use(const Oracle& o, const System& sys) {
  MonitorUse use;
  for (const auto& t : o.transitions) {
    std::set<std::string> refs;
    collect_vars(t.event.expr, refs);
    for (const auto& r : refs) {
      auto pos = r.find('.');
      if (pos == std::string::npos)
        throw OracleError("event reference '" + r + "' is not qualified (comp.x)");
      std::string comp = r.substr(0, pos);
      std::string item = r.substr(pos + 1);
      const AtomicComponent* c = sys.find_component(comp);
      if (!c) throw OracleError("event references unknown component '" + comp + "'");
      if (item == "loc") use.locs.insert(comp);
      else if (item == "port") use.ports.insert(comp);
      else if (c->has_var(item)) use.vars[comp].insert(item);
      else throw OracleError("event references unknown variable '" + r + "'");
    }
  }
  return use;
}

// ---------------------------------------------------------------------------
// Monitoring a run
// ---------------------------------------------------------------------------

/// Advance the oracle by one observed configuration. Exactly one outgoing
/// event must hold (determinism and completeness are enforced here, at
/// observation time).
inline const OracleTransition* oracle_step(const Oracle& o, const std::string& state,
                                           const System& sys, const GlobalConfig& g) {
  const OracleTransition* taken = nullptr;
  for (const auto* t : o.outgoing(state)) {
    if (!eval_event(t->event, sys, g)) continue;
    if (taken)
      throw OracleError("oracle is nondeterministic at state '" + state + "': events '" +
                        taken->event.text + "' and '" + t->event.text + "' both hold");
    taken = t;
  }
  if (!taken)
    throw OracleError("oracle is incomplete at state '" + state + "': no event holds");
  return taken;
}

inline Verdict state_verdict(const Oracle& o, const std::string& name);

/// Verdict of a transition's target, honoring an explicit output override.
inline Verdict transition_verdict(const Oracle& o, const OracleTransition& t) {
  if (t.output) return *t.output == "bad" ? Verdict::Bot : Verdict::TopC;
  return state_verdict(o, t.to);
}

/// Monitor a sequence of configurations (the observed run suffix, without the
/// initial configuration unless the caller includes it). Returns the verdict
/// after each observation; the last entry is the run verdict.
inline std::vector<Verdict> evaluate_sequence(const Oracle& o, const System& sys,
                                              const std::vector<GlobalConfig>& configs) {
  std::vector<Verdict> out;
  std::string state = o.initial;
  for (const auto& g : configs) {
    const OracleTransition* t = oracle_step(o, state, sys, g);
    out.push_back(transition_verdict(o, *t));
    state = t->to;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Verdict annotation and classification
// ---------------------------------------------------------------------------

namespace detail {

inline std::map<std::string, std::set<std::string>> oracle_adjacency(const Oracle& o) {
  std::map<std::string, std::set<std::string>> adj;
  for (const auto& s : o.states) adj[s.name];
  for (const auto& t : o.transitions) adj[t.from].insert(t.to);
  return adj;
}

inline std::set<std::string> reach_from(const std::map<std::string, std::set<std::string>>& adj,
                                        const std::string& start) {
  std::set<std::string> seen{start};
  std::deque<std::string> todo{start};
  while (!todo.empty()) {
    auto n = todo.front();
    todo.pop_front();
    auto it = adj.find(n);
    if (it == adj.end()) continue;
    for (const auto& m : it->second)
      if (seen.insert(m).second) todo.push_back(m);
  }
  return seen;
}

inline bool state_accepting(const Oracle& o, const OracleState& s) {
  if (s.accepting) return *s.accepting;
  return good_verdict(*s.verdict);
}

} // namespace detail

/// Derive each state's four-valued verdict from acceptance and reachability:
/// the verdict is definitive exactly when no reachable state flips acceptance.
inline std::map<std::string, Verdict> verdict_annotate(const Oracle& o) {
  auto adj = detail::oracle_adjacency(o);
  std::map<std::string, bool> acc;
  for (const auto& s : o.states) acc[s.name] = detail::state_accepting(o, s);
  std::map<std::string, Verdict> out;
  for (const auto& s : o.states) {
    auto reach = detail::reach_from(adj, s.name);
    bool some_acc = false, some_rej = false;
    for (const auto& r : reach) (acc[r] ? some_acc : some_rej) = true;
    if (acc[s.name])
      out[s.name] = some_rej ? Verdict::TopC : Verdict::Top;
    else
      out[s.name] = some_acc ? Verdict::BotC : Verdict::Bot;
  }
  return out;
}

inline Verdict state_verdict(const Oracle& o, const std::string& name) {
  int i = o.state_index(name);
  if (i < 0) throw OracleError("unknown oracle state '" + name + "'");
  const OracleState& s = o.states[i];
  if (s.verdict) return *s.verdict;
  return verdict_annotate(o).at(name);
}

/// Safety: once the property is violated it stays violated, i.e. no state
/// reachable from the initial one carries the "currently bad but may
/// recover" verdict.
inline bool is_safety(const Oracle& o) {
  auto verdicts = verdict_annotate(o);
  for (const auto& n : detail::reach_from(detail::oracle_adjacency(o), o.initial))
    if (verdicts.at(n) == Verdict::BotC) return false;
  return true;
}

namespace detail {

/// Letter-level DFA view of an oracle: states x alphabet, with acceptance as
/// Moore output. Requires the oracle to carry every alphabet letter at every
/// reachable state.
struct LetterDfa {
  std::vector<std::string> states;
  std::vector<Event> letters;
  std::map<std::string, std::map<std::string, std::string>> delta; // state -> letter text -> state
  std::map<std::string, bool> accepting;
  std::string initial;
};

inline LetterDfa letter_dfa(const Oracle& o) {
  LetterDfa d;
  d.letters = o.alphabet();
  d.initial = o.initial;
  auto reach = reach_from(oracle_adjacency(o), o.initial);
  for (const auto& s : o.states) {
    if (!reach.count(s.name)) continue;
    d.states.push_back(s.name);
    d.accepting[s.name] = state_accepting(o, s);
  }
  for (const auto& t : o.transitions)
    if (reach.count(t.from)) d.delta[t.from][t.event.text] = t.to;
  for (const auto& s : d.states)
    for (const auto& e : d.letters)
      if (!d.delta[s].count(e.text))
        throw OracleError("state '" + s + "' lacks a transition for event '" + e.text +
                          "'; letter-level analysis needs a uniform alphabet");
  return d;
}

/// Moore minimization by partition refinement on acceptance.
inline std::map<std::string, int> minimize_classes(const LetterDfa& d) {
  std::map<std::string, int> cls;
  for (const auto& s : d.states) cls[s] = d.accepting.at(s) ? 1 : 0;
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<std::vector<int>, int> sig_to_class;
    std::map<std::string, int> next;
    for (const auto& s : d.states) {
      std::vector<int> sig{cls[s]};
      for (const auto& e : d.letters) sig.push_back(cls[d.delta.at(s).at(e.text)]);
      auto [it, fresh] = sig_to_class.emplace(sig, static_cast<int>(sig_to_class.size()));
      next[s] = it->second;
      (void)fresh;
    }
    if (next != cls) {
      cls = std::move(next);
      changed = true;
    }
  }
  return cls;
}

} // namespace detail

/// Stutter-invariance check on the minimized letter-level automaton:
/// repeating a letter never changes the class reached.
inline bool is_stutter_invariant(const Oracle& o) {
  auto d = detail::letter_dfa(o);
  auto cls = detail::minimize_classes(d);
  for (const auto& s : d.states)
    for (const auto& e : d.letters) {
      const std::string& once = d.delta.at(s).at(e.text);
      const std::string& twice = d.delta.at(once).at(e.text);
      if (cls[once] != cls[twice]) return false;
    }
  return true;
}

/// Number of memorization steps needed to enforce the property, or nullopt
/// when no finite bound exists. Safety properties need exactly one step; each
/// extra step covers one more consecutive "currently bad, may recover" state
/// the run is allowed to traverse.
inline std::optional<int> enforceability_k(const Oracle& o) {
  auto verdicts = verdict_annotate(o);
  auto adj = detail::oracle_adjacency(o);
  auto reach = detail::reach_from(adj, o.initial);
  std::vector<std::string> botc;
  for (const auto& n : reach)
    if (verdicts.at(n) == Verdict::BotC) botc.push_back(n);
  if (botc.empty()) return 1;

  // longest chain inside the BotC subgraph; a cycle means no finite bound
  std::map<std::string, int> depth; // 0 unknown, else chain length from here
  std::map<std::string, int> state; // 1 on stack, 2 done
  bool cyclic = false;
  auto dfs = [&](auto&& self, const std::string& n) -> int {
    state[n] = 1;
    int best = 1;
    auto it = adj.find(n);
    if (it != adj.end())
      for (const auto& m : it->second) {
        if (verdicts.at(m) != Verdict::BotC) continue;
        if (state[m] == 1) {
          cyclic = true;
          continue;
        }
        int sub = state[m] == 2 ? depth[m] : self(self, m);
        best = std::max(best, 1 + sub);
      }
    state[n] = 2;
    depth[n] = best;
    return best;
  };
  int longest = 0;
  for (const auto& n : botc)
    if (state[n] == 0) longest = std::max(longest, dfs(dfs, n));
    else longest = std::max(longest, depth[n]);
  if (cyclic) return std::nullopt;
  return longest + 1;
}

struct Classification {
  bool safety = false;
  bool stutter_invariant = false;
  std::optional<int> k; // nullopt: not enforceable with any finite memory
  std::vector<std::string> warnings;
};

inline Classification classify_oracle(const Oracle& o) {
  Classification c;
  c.safety = is_safety(o);
  c.stutter_invariant = is_stutter_invariant(o);
  c.k = enforceability_k(o);
  for (const auto& t : o.transitions)
    if (syntactically_tautological(t.event))
      c.warnings.push_back("event '" + t.event.text + "' looks tautological");
  return c;
}

// ---------------------------------------------------------------------------
// Oracle file format
// ---------------------------------------------------------------------------

inline Oracle oracle_from_json(const json& j) {
  Oracle o;
  for (const auto& s : j.at("states")) {
    OracleState st;
    st.name = s.at("name").get<std::string>();
    if (s.contains("verdict")) st.verdict = verdict_from_name(s.at("verdict").get<std::string>());
    if (s.contains("accepting")) st.accepting = s.at("accepting").get<bool>();
    o.states.push_back(std::move(st));
  }
  o.initial = j.at("initial").get<std::string>();
  for (const auto& t : j.at("transitions")) {
    OracleTransition tr;
    tr.from = t.at("from").get<std::string>();
    tr.event = parse_event(t.at("event").get<std::string>());
    tr.to = t.at("to").get<std::string>();
    if (t.contains("output")) tr.output = t.at("output").get<std::string>();
    o.transitions.push_back(std::move(tr));
  }
  auto diags = validate_oracle(o);
  if (!diags.empty()) {
    std::string msg = "invalid oracle:";
    for (const auto& d : diags) msg += "\n  " + d;
    throw OracleError(msg);
  }
  return o;
}

inline json oracle_to_json(const Oracle& o) {
  json j;
  j["states"] = json::array();
  for (const auto& s : o.states) {
    json js{{"name", s.name}};
    if (s.verdict) js["verdict"] = verdict_name(*s.verdict);
    if (s.accepting) js["accepting"] = *s.accepting;
    j["states"].push_back(std::move(js));
  }
  j["initial"] = o.initial;
  j["transitions"] = json::array();
  for (const auto& t : o.transitions) {
    json jt{{"from", t.from}, {"event", t.event.text}, {"to", t.to}};
    if (t.output) jt["output"] = *t.output;
    j["transitions"].push_back(std::move(jt));
  }
  return j;
}

inline Oracle load_oracle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open oracle file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("malformed JSON in '" + path + "': " + e.what());
  }
  try {
    return oracle_from_json(j);
  } catch (const json::exception& e) {
    throw ParseError("bad oracle structure in '" + path + "': " + e.what());
  }
}

} // namespace rebip

#endif
