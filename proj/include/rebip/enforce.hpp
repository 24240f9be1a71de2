#ifndef REBIP_ENFORCE_HPP
#define REBIP_ENFORCE_HPP

#include "rebip/property.hpp"

namespace rebip {

struct EnforceError : std::runtime_error {
  explicit EnforceError(const std::string& m) : std::runtime_error(m) {}
};

/// Cancellation symbol for a letter: spelled with a trailing '~'.
inline std::string cancel_symbol(const std::string& letter) { return letter + "~"; }
inline bool is_cancel_symbol(const std::string& s) { return !s.empty() && s.back() == '~'; }

// ---------------------------------------------------------------------------
// Abstract system: a plain labelled transition system over letters
// ---------------------------------------------------------------------------

struct LtsTransition {
  std::string from;
  std::string label;
  std::string to;
};

struct Lts {
  std::vector<std::string> states;
  std::string initial;
  std::vector<LtsTransition> transitions;

  std::set<std::string> labels() const {
    std::set<std::string> out;
    for (const auto& t : transitions) out.insert(t.label);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Enforcement monitor
// ---------------------------------------------------------------------------

struct EmTransition {
  std::string from;
  std::string symbol; // letter, or its cancellation symbol
  std::string to;
  bool cancellation = false;
};

struct AbstractEM {
  std::vector<std::string> states;
  std::set<std::string> intermediates; // subset of states
  std::string initial;
  std::set<std::string> alphabet; // Σ, letters only (Σ̄ is implied)
  std::vector<EmTransition> transitions;
};

/// Build the enforcement monitor of a safety oracle: good-verdict oracle
/// transitions are kept as-is; each bad-verdict transition is replaced by a
/// detour through a fresh intermediate state with a cancellation edge back.
inline AbstractEM build_abstract_em(const Oracle& o) {
  if (!is_safety(o)) throw EnforceError("enforcement monitor construction needs a safety oracle");
  AbstractEM em;
  em.initial = o.initial;
  for (const auto& e : o.alphabet()) em.alphabet.insert(e.text);
  // the monitor cancels every bad edge, so only states reachable through
  // good edges can ever host it
  std::map<std::string, std::set<std::string>> good_adj;
  for (const auto& t : o.transitions)
    if (good_verdict(transition_verdict(o, t))) good_adj[t.from].insert(t.to);
  auto reach = detail::reach_from(good_adj, o.initial);
  for (const auto& s : o.states)
    if (reach.count(s.name)) em.states.push_back(s.name);
  for (const auto& t : o.transitions) {
    if (!reach.count(t.from)) continue;
    if (good_verdict(transition_verdict(o, t))) {
      em.transitions.push_back({t.from, t.event.text, t.to, false});
    } else {
      std::string mid = t.from + "@" + t.event.text;
      if (!em.intermediates.count(mid)) {
        em.states.push_back(mid);
        em.intermediates.insert(mid);
      }
      em.transitions.push_back({t.from, t.event.text, mid, false});
      em.transitions.push_back({mid, cancel_symbol(t.event.text), t.from, true});
    }
  }
  return em;
}

// ---------------------------------------------------------------------------
// Composition
// ---------------------------------------------------------------------------

struct ComposedState {
  std::string loc;   // system state
  std::string theta; // EM state

  std::string str() const { return "(" + loc + "," + theta + ")"; }
  bool operator<(const ComposedState& o) const {
    return loc < o.loc || (loc == o.loc && theta < o.theta);
  }
  bool operator==(const ComposedState& o) const { return loc == o.loc && theta == o.theta; }
};

struct ComposedTransition {
  ComposedState from;
  std::vector<std::string> word; // one symbol, or an atomic e·ē pair
  ComposedState to;
};

struct ComposedLts {
  std::vector<ComposedState> states;
  ComposedState initial;
  std::vector<ComposedTransition> transitions;
};

/// Compose a system LTS over Σ' with an EM over Σ ⊆ Σ':
///  - labels outside Σ pass through without moving the EM,
///  - labels the EM accepts into a plain state synchronize,
///  - labels the EM would divert to an intermediate fire the atomic pair e·ē
///    and leave both the system and the EM where they were.
inline ComposedLts compose(const Lts& lts, const AbstractEM& em) {
  auto sys_labels = lts.labels();
  for (const auto& l : em.alphabet)
    if (!sys_labels.count(l))
      throw EnforceError("EM letter '" + l + "' is not a system label");
  for (const auto& l : sys_labels)
    if (is_cancel_symbol(l))
      throw EnforceError("system label '" + l + "' clashes with a cancellation symbol");

  ComposedLts out;
  out.initial = {lts.initial, em.initial};
  std::set<ComposedState> seen{out.initial};
  std::deque<ComposedState> todo{out.initial};
  auto push = [&](const ComposedState& s) {
    if (seen.insert(s).second) todo.push_back(s);
  };
  while (!todo.empty()) {
    ComposedState s = todo.front();
    todo.pop_front();
    for (const auto& t : lts.transitions) {
      if (t.from != s.loc) continue;
      if (!em.alphabet.count(t.label)) {
        ComposedState n{t.to, s.theta};
        out.transitions.push_back({s, {t.label}, n});
        push(n);
        continue;
      }
      for (const auto& et : em.transitions) {
        if (et.from != s.theta || et.symbol != t.label) continue;
        if (!em.intermediates.count(et.to)) {
          ComposedState n{t.to, et.to};
          out.transitions.push_back({s, {t.label}, n});
          push(n);
        } else {
          bool has_back = false;
          for (const auto& back : em.transitions)
            has_back |= (back.from == et.to && back.cancellation && back.to == s.theta);
          if (has_back) {
            out.transitions.push_back({s, {t.label, cancel_symbol(t.label)}, s});
          } else {
            // defective EM: the diversion is a dead move into the
            // intermediate, observable as a bad projection
            ComposedState n{t.to, et.to};
            out.transitions.push_back({s, {t.label}, n});
            push(n);
          }
        }
      }
    }
  }
  out.states.assign(seen.begin(), seen.end());
  return out;
}

// ---------------------------------------------------------------------------
// ctrl projection
// ---------------------------------------------------------------------------

/// Remove cancelled events: each ē erases itself and the immediately
/// preceding matching e. Throws on a dangling cancellation.
inline std::vector<std::string> ctrl_project(const std::vector<std::string>& word) {
  std::vector<std::string> out;
  for (const auto& s : word) {
    if (is_cancel_symbol(s)) {
      if (out.empty() || cancel_symbol(out.back()) != s || is_cancel_symbol(out.back()))
        throw EnforceError("ill-formed word: '" + s + "' does not cancel the preceding event");
      out.pop_back();
    } else {
      out.push_back(s);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force correctness harness
// ---------------------------------------------------------------------------

namespace detail {

/// Property membership of a letter word: run the oracle's letter automaton
/// (letters outside its alphabet do not move it) and demand acceptance along
/// the way.
inline bool word_in_property(const Oracle& o, const std::vector<std::string>& word) {
  std::map<std::string, bool> acc;
  for (const auto& s : o.states) acc[s.name] = state_accepting(o, s);
  std::string state = o.initial;
  if (!acc.at(state)) return false;
  std::set<std::string> alpha;
  for (const auto& e : o.alphabet()) alpha.insert(e.text);
  for (const auto& l : word) {
    if (!alpha.count(l)) continue;
    const OracleTransition* next = nullptr;
    for (const auto& t : o.transitions)
      if (t.from == state && t.event.text == l) next = &t;
    if (!next) return false; // incomplete at letter level: treat as rejected
    state = next->to;
    if (!acc.at(state)) return false;
  }
  return true;
}

/// Word membership in the (possibly nondeterministic) LTS language.
inline bool word_in_lts(const Lts& lts, const std::vector<std::string>& word) {
  std::set<std::string> cur{lts.initial};
  for (const auto& l : word) {
    std::set<std::string> next;
    for (const auto& t : lts.transitions)
      if (cur.count(t.from) && t.label == l) next.insert(t.to);
    if (next.empty()) return false;
    cur = std::move(next);
  }
  return true;
}

inline void enumerate_words(const ComposedLts& c, const ComposedState& s,
                            std::vector<std::string>& word, size_t steps_left,
                            std::set<std::vector<std::string>>& out) {
  out.insert(word);
  if (steps_left == 0) return;
  for (const auto& t : c.transitions) {
    if (!(t.from == s)) continue;
    for (const auto& sym : t.word) word.push_back(sym);
    enumerate_words(c, t.to, word, steps_left - 1, out);
    word.resize(word.size() - t.word.size());
  }
}

} // namespace detail

struct SoundnessReport {
  bool item1 = true;
  bool item2 = true;
  std::optional<std::vector<std::string>> counterexample;
  size_t traces_checked = 0;

  json to_json() const {
    json j;
    j["item1"] = item1;
    j["item2"] = item2;
    j["counterexample"] = counterexample ? json(*counterexample) : json(nullptr);
    j["traces_checked"] = traces_checked;
    return j;
  }
};

/// Exhaustively check the composed system against the oracle, up to `bound`
/// composed steps. Item 1: a trace ending in a plain event whose projection
/// violates the property deviated by that one event only (the strict prefix
/// projects inside the property). Item 2: every projection both satisfies the
/// property and is a trace of the unsupervised system.
inline SoundnessReport check_em_soundness(const Lts& lts, const AbstractEM& em, const Oracle& o,
                                          size_t bound) {
  ComposedLts comp = compose(lts, em);
  std::set<std::vector<std::string>> words;
  std::vector<std::string> w;
  detail::enumerate_words(comp, comp.initial, w, bound, words);

  SoundnessReport rep;
  rep.traces_checked = words.size();
  for (const auto& word : words) {
    auto proj = ctrl_project(word);
    if (!word.empty() && !is_cancel_symbol(word.back()) && !detail::word_in_property(o, proj)) {
      auto prefix = word;
      prefix.pop_back();
      if (!detail::word_in_property(o, ctrl_project(prefix))) {
        rep.item1 = false;
        if (!rep.counterexample) rep.counterexample = word;
      }
    }
    if (!detail::word_in_property(o, proj) || !detail::word_in_lts(lts, proj)) {
      rep.item2 = false;
      if (!rep.counterexample) rep.counterexample = word;
    }
  }
  return rep;
}

inline SoundnessReport check_em_soundness(const Lts& lts, const Oracle& o, size_t bound) {
  return check_em_soundness(lts, build_abstract_em(o), o, bound);
}

} // namespace rebip

#endif
