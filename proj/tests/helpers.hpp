#pragma once
// Shared test scaffolding: tiny model builders, brute-force reference
// implementations, and randomized generators for letter-level automata.

#include <rebip/bench.hpp>
#include <rebip/checks.hpp>

#include <random>

namespace testutil {

using namespace rebip;

// ---------------------------------------------------------------------------
// Small hand-built systems
// ---------------------------------------------------------------------------

/// Two components synchronizing on a rendezvous connector; "a" carries a data
/// variable on its port so transfers can be exercised.
inline System make_pair_system() {
  System sys;
  AtomicComponent a;
  a.name = "a";
  a.variables = {{"x", Value(int64_t{1})}};
  a.ports = {Port{"p", {"x"}}};
  a.locations = {"l0", "l1"};
  a.initial = "l0";
  a.transitions = {Transition{"l0", "p", expr_true(), {}, "l1"},
                   Transition{"l1", "p", expr_true(), {}, "l0"}};
  sys.components.push_back(a);

  AtomicComponent b;
  b.name = "b";
  b.variables = {{"y", Value(int64_t{10})}};
  b.ports = {Port{"q", {"y"}}};
  b.locations = {"m0", "m1"};
  b.initial = "m0";
  b.transitions = {Transition{"m0", "q", expr_true(), {}, "m1"},
                   Transition{"m1", "q", expr_true(), {}, "m0"}};
  sys.components.push_back(b);

  Connector c;
  c.name = "sync";
  c.guard = expr_true();
  c.ports = {PortRef{"a", "p"}, PortRef{"b", "q"}};
  sys.connectors.push_back(c);
  return sys;
}

// ---------------------------------------------------------------------------
// Brute-force interaction enumeration (reference for feasible_interactions)
// ---------------------------------------------------------------------------

/// All feasible port subsets of a flat connector by definition: any nonempty
/// subset containing a trigger, or the full set when there are no triggers.
inline std::vector<std::vector<std::string>> brute_feasible(const Connector& c) {
  std::vector<std::string> refs;
  for (const auto& p : c.ports) refs.push_back(p.owner + "." + p.port);
  std::vector<std::vector<std::string>> out;
  size_t n = refs.size();
  for (size_t mask = 1; mask < (size_t{1} << n); ++mask) {
    std::vector<std::string> sub;
    bool has_trigger = false;
    for (size_t i = 0; i < n; ++i)
      if (mask & (size_t{1} << i)) {
        sub.push_back(refs[i]);
        if (c.triggers.count(refs[i])) has_trigger = true;
      }
    bool full = sub.size() == n;
    if (has_trigger || (c.triggers.empty() && full)) {
      std::sort(sub.begin(), sub.end());
      out.push_back(std::move(sub));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Letter-level oracles and brute-force classification
// ---------------------------------------------------------------------------

/// Oracle whose events are plain letters ("a", "b", ...). Verdicts derived
/// from `accepting`.
inline Oracle letter_oracle(const std::vector<std::pair<std::string, bool>>& states,
                            const std::string& initial,
                            const std::vector<std::tuple<std::string, std::string, std::string>>&
                                transitions) {
  Oracle o;
  for (const auto& [name, acc] : states) o.states.push_back({name, {}, acc});
  o.initial = initial;
  for (const auto& [from, letter, to] : transitions)
    o.transitions.push_back({from, parse_event(letter), to, {}});
  return o;
}

/// Brute-force enforceability bound: walk every letter word up to `len` and
/// record the longest stretch of consecutive bad verdicts; the bound is one
/// more than that. Assumes the chains are short enough to show up within
/// `len` letters.
inline int brute_k(const Oracle& o, size_t len) {
  std::map<std::string, bool> acc;
  for (const auto& s : o.states) acc[s.name] = detail::state_accepting(o, s);
  std::set<std::string> alpha;
  for (const auto& e : o.alphabet()) alpha.insert(e.text);
  int best = 0;
  // state of the walk: (oracle state, current bad streak)
  std::set<std::pair<std::string, int>> seen;
  std::deque<std::pair<std::pair<std::string, int>, size_t>> todo;
  todo.push_back({{o.initial, 0}, 0});
  seen.insert({o.initial, 0});
  while (!todo.empty()) {
    auto [st, d] = todo.front();
    todo.pop_front();
    best = std::max(best, st.second);
    if (d >= len) continue;
    for (const auto& l : alpha) {
      const OracleTransition* next = nullptr;
      for (const auto& t : o.transitions)
        if (t.from == st.first && t.event.text == l) next = &t;
      if (!next) continue;
      Verdict v = transition_verdict(o, *next);
      int streak = (v == Verdict::BotC) ? st.second + 1 : (good_verdict(v) ? 0 : st.second);
      if (v == Verdict::Bot) continue; // hopeless, no enforcement question left
      if (seen.insert({next->to, streak}).second) todo.push_back({{next->to, streak}, d + 1});
    }
  }
  return best + 1;
}

// ---------------------------------------------------------------------------
// Randomized letter-level LTS / safety-oracle pairs
// ---------------------------------------------------------------------------

/// Random complete DFA over `alphabet` with rejecting sinks, so the property
/// it accepts is a safety property. The initial state is always accepting.
inline Oracle random_safety_oracle(std::mt19937_64& rng,
                                   const std::vector<std::string>& alphabet, int max_states) {
  std::uniform_int_distribution<int> nd(2, max_states);
  int n = nd(rng);
  Oracle o;
  for (int i = 0; i < n; ++i) {
    bool acc = i == 0 || std::uniform_int_distribution<int>(0, 3)(rng) > 0;
    o.states.push_back({"q" + std::to_string(i), {}, acc});
  }
  o.initial = "q0";
  std::uniform_int_distribution<int> sd(0, n - 1);
  for (int i = 0; i < n; ++i) {
    for (const auto& l : alphabet) {
      std::string to = o.states[i].accepting.value() ? "q" + std::to_string(sd(rng))
                                                     : o.states[i].name; // rejecting: sink
      o.transitions.push_back({o.states[i].name, parse_event(l), to, {}});
    }
  }
  return o;
}

/// Random LTS over the same alphabet; every letter labels at least one edge
/// so the oracle alphabet is covered.
inline Lts random_lts(std::mt19937_64& rng, const std::vector<std::string>& alphabet,
                      int max_states) {
  std::uniform_int_distribution<int> nd(1, max_states);
  int n = nd(rng);
  Lts lts;
  for (int i = 0; i < n; ++i) lts.states.push_back("s" + std::to_string(i));
  lts.initial = "s0";
  std::uniform_int_distribution<int> sd(0, n - 1);
  std::uniform_int_distribution<int> ed(1, 3);
  for (int i = 0; i < n; ++i) {
    int edges = ed(rng);
    for (int e = 0; e < edges; ++e) {
      const std::string& l = alphabet[std::uniform_int_distribution<size_t>(
          0, alphabet.size() - 1)(rng)];
      lts.transitions.push_back({lts.states[i], l, lts.states[sd(rng)]});
    }
  }
  for (const auto& l : alphabet) {
    bool used = false;
    for (const auto& t : lts.transitions) used |= t.label == l;
    if (!used) lts.transitions.push_back({lts.states[sd(rng)], l, lts.states[sd(rng)]});
  }
  return lts;
}

} // namespace testutil
