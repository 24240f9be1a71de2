#ifndef REBIP_CHECKS_HPP
#define REBIP_CHECKS_HPP

#include "rebip/enforce.hpp"
#include "rebip/transform.hpp"

namespace rebip {

// ---------------------------------------------------------------------------
// Bridge to the abstract enforcement layer
// ---------------------------------------------------------------------------

/// Abstract a system into a letter LTS: states are reachable configurations,
/// each edge is labelled by the unique oracle event its target configuration
/// satisfies. Requires the oracle's events to partition configurations
/// globally (one event letter true at a time).
inline Lts lts_from_system(const System& sys, const Oracle& o, size_t bound, bool& truncated) {
  Lts lts;
  auto alphabet = o.alphabet();
  auto letter_of = [&](const GlobalConfig& g) {
    const Event* found = nullptr;
    for (const auto& e : alphabet) {
      if (!eval_event(e, sys, g)) continue;
      if (found)
        throw OracleError("events '" + found->text + "' and '" + e.text +
                          "' both hold at one configuration; cannot abstract to letters");
      found = &e;
    }
    if (!found) throw OracleError("no oracle event holds at a reachable configuration");
    return found->text;
  };

  detail::PriorityOrder order(sys);
  std::map<GlobalConfig, std::string> id_of;
  std::deque<GlobalConfig> todo;
  GlobalConfig g0 = initial_config(sys);
  id_of[g0] = "q0";
  lts.states.push_back("q0");
  lts.initial = "q0";
  todo.push_back(g0);
  truncated = false;
  while (!todo.empty()) {
    GlobalConfig g = std::move(todo.front());
    todo.pop_front();
    for (const auto& a : enabled_interactions(sys, g, order)) {
      GlobalConfig n = apply_interaction(sys, g, a);
      auto it = id_of.find(n);
      if (it == id_of.end()) {
        if (id_of.size() >= bound) {
          truncated = true;
          continue;
        }
        std::string id = "q" + std::to_string(id_of.size());
        it = id_of.emplace(n, id).first;
        lts.states.push_back(id);
        todo.push_back(n);
      }
      lts.transitions.push_back({id_of.at(g), letter_of(n), it->second});
    }
  }
  return lts;
}

// ---------------------------------------------------------------------------
// Supervised-system runner
// ---------------------------------------------------------------------------

struct SupRunOptions {
  size_t max_steps = 100000;
  size_t correct_target = 0;      // stop after this many correct steps (0: run out max_steps)
  bool keep_run = true;           // retain the full run (off for long benchmarks)
  size_t livelock_rollbacks = 64; // consecutive rollbacks before flagging a livelock
};

struct SupRunStats {
  size_t steps = 0;
  size_t rollbacks = 0;      // fired recover interactions
  size_t correct_steps = 0;  // continue completions plus pass-through steps
  bool deadlock = false;
  bool livelock = false;
  Run run;                   // populated when keep_run
  GlobalConfig final_config;
};

/// Drive a supervised system, counting rollbacks and correct (stable,
/// property-preserving) steps. Spin-mode livelock is flagged after a long
/// streak of rollbacks with no correct step in between.
inline SupRunStats run_supervised(const System& sup, const SupervisionInfo& info, Policy& policy,
                                  const SupRunOptions& opts) {
  SupRunStats st;
  detail::PriorityOrder order(sup);
  GlobalConfig g = initial_config(sup);
  if (opts.keep_run) st.run.configs.push_back(g);
  size_t rollback_streak = 0;
  auto is_family = [&](const Interaction& a, const char* port) {
    return a.contains(info.monitor + "." + port);
  };
  while (st.steps < opts.max_steps &&
         (opts.correct_target == 0 || st.correct_steps < opts.correct_target)) {
    auto enabled = enabled_interactions(sup, g, order);
    if (enabled.empty()) {
      st.deadlock = true;
      break;
    }
    const Interaction& a = policy.choose(enabled);
    g = apply_interaction(sup, g, a);
    ++st.steps;
    if (opts.keep_run) {
      st.run.steps.push_back(a);
      st.run.configs.push_back(g);
    }
    bool correct = false;
    if (is_family(a, "pr")) {
      ++st.rollbacks;
      ++rollback_streak;
    } else if (is_family(a, "pc")) {
      correct = true;
    } else if (!is_family(a, "pm") && !interaction_touches(a, info.monitor)) {
      // plain step: correct unless it opened a recoverable block
      bool opened = false;
      for (const auto& [comp, ci] : info.comps) {
        int si = sup.component_index(comp);
        opened |= ci.lm_locs.count(g.locals[si].loc) > 0;
      }
      correct = !opened;
    }
    if (correct) {
      ++st.correct_steps;
      rollback_streak = 0;
    }
    if (rollback_streak >= opts.livelock_rollbacks) {
      st.livelock = true;
      break;
    }
  }
  st.final_config = g;
  return st;
}

// ---------------------------------------------------------------------------
// Proposition checks (exhaustive, for small instances)
// ---------------------------------------------------------------------------

struct PropositionReport {
  bool soundness = true;     // stable states only at property-satisfying verdicts
  bool containment = true;   // every projected run is a run of the original system
  bool block_shape = true;   // observation is immediately followed by a decision
  bool homogeneity = true;   // monitor-family interactions mix no other ports
  bool completeness = true;  // good original runs replay into the supervised system
  bool truncated = false;
  std::string counterexample;

  bool all_pass() const {
    return soundness && containment && block_shape && homogeneity && completeness;
  }
  json to_json() const {
    return json{{"soundness", soundness},       {"containment", containment},
                {"block_shape", block_shape},   {"homogeneity", homogeneity},
                {"completeness", completeness}, {"truncated", truncated},
                {"counterexample", counterexample.empty() ? json(nullptr) : json(counterexample)}};
  }
};

namespace detail {

struct ProductState {
  GlobalConfig config;
  std::string theta;
  int phase; // 0 boundary, 1 observation pending, 2 decision pending
  GlobalConfig pre_erased;  // meaningful in phases 1-2
  GlobalConfig expected;    // meaningful in phases 1-2

  auto tie() const { return std::tie(config, theta, phase, pre_erased, expected); }
  bool operator<(const ProductState& o) const { return tie() < o.tie(); }
};

inline bool family_interaction(const SupervisionInfo& info, const Interaction& a,
                               const char* which) {
  for (const auto& pr : a.ports) {
    auto ref = parse_port_ref(pr);
    std::string want;
    if (ref.owner == info.monitor || ref.owner == info.disabler)
      want = which;
    else if (auto it = info.comps.find(ref.owner); it != info.comps.end())
      want = std::string(which) == "pm" ? it->second.pm
             : std::string(which) == "pc" ? it->second.pc
                                          : it->second.pr;
    else
      return false;
    if (ref.port != want) return false;
  }
  return true;
}

} // namespace detail

/// Exhaustive product exploration of the supervised system with the oracle,
/// checking the run-shape and correctness properties on every reachable
/// behavior (up to state_bound product states).
inline PropositionReport check_propositions(const System& orig, const System& sup,
                                            const SupervisionInfo& info, const Oracle& o,
                                            size_t state_bound = 200000,
                                            size_t replay_depth = 6) {
  PropositionReport rep;
  detail::PriorityOrder sup_order(sup);
  detail::PriorityOrder orig_order(orig);
  std::map<std::string, bool> acc;
  for (const auto& s : o.states) acc[s.name] = detail::state_accepting(o, s);

  auto fail = [&](bool& flag, const std::string& why) {
    flag = false;
    if (rep.counterexample.empty()) rep.counterexample = why;
  };
  auto strip = [&](const Interaction& a) {
    Interaction p;
    p.connector = a.connector;
    for (const auto& pr : a.ports)
      if (!info.is_monitor_port(parse_port_ref(pr).owner)) p.ports.push_back(pr);
    return p;
  };
  auto entered_block = [&](const GlobalConfig& g) {
    for (const auto& [comp, ci] : info.comps) {
      int si = sup.component_index(comp);
      if (ci.lm_locs.count(g.locals[si].loc)) return true;
    }
    return false;
  };
  auto in_orig = [&](const GlobalConfig& g, const Interaction& a) {
    auto enabled = enabled_interactions(orig, g, orig_order);
    return std::find(enabled.begin(), enabled.end(), a) != enabled.end();
  };

  detail::ProductState init{initial_config(sup), o.initial, 0, {}, {}};
  std::set<detail::ProductState> seen{init};
  std::deque<detail::ProductState> todo{init};
  while (!todo.empty()) {
    detail::ProductState s = std::move(todo.front());
    todo.pop_front();
    auto enabled = enabled_interactions(sup, s.config, sup_order);

    bool stable = true;
    for (const auto& a : enabled) stable &= !interaction_touches(a, info.monitor);
    if (s.phase == 0 && stable && !acc.at(s.theta))
      fail(rep.soundness, "stable configuration with rejecting oracle state '" + s.theta + "'");
    if (s.phase == 1 || s.phase == 2) {
      if (enabled.empty())
        fail(rep.block_shape, "deadlock inside a recoverable block");
      for (const auto& a : enabled) {
        bool ok = s.phase == 1 ? a.contains(info.monitor + ".pm")
                               : a.contains(info.monitor + ".pc") ||
                                     a.contains(info.monitor + ".pr");
        if (!ok)
          fail(rep.block_shape, "non-decision interaction " + a.id() + " enabled mid-block");
      }
    }
    for (const auto& a : enabled)
      for (const char* f : {"pm", "pc", "pr"})
        if (a.contains(info.monitor + "." + std::string(f)) &&
            !detail::family_interaction(info, a, f))
          fail(rep.homogeneity, "mixed interaction " + a.id());

    for (const auto& a : enabled) {
      GlobalConfig next = apply_interaction(sup, s.config, a);
      detail::ProductState n{next, s.theta, 0, {}, {}};
      bool skip = false;
      if (a.contains(info.monitor + ".pm")) {
        n.phase = s.phase == 1 ? 2 : 0;
        n.pre_erased = s.pre_erased;
        n.expected = s.expected;
      } else if (a.contains(info.monitor + ".pc")) {
        try {
          GlobalConfig proj = detail::erase_config(orig, sup, info, next);
          if (!detail::same_ignoring_ports(proj, s.expected))
            fail(rep.containment, "continue landed off the original step: " + a.id());
          const OracleTransition* t = oracle_step(o, s.theta, orig, proj);
          n.theta = t->to;
        } catch (const std::exception& e) {
          fail(rep.containment, e.what());
          skip = true;
        }
      } else if (a.contains(info.monitor + ".pr")) {
        try {
          GlobalConfig proj = detail::erase_config(orig, sup, info, next);
          if (!detail::same_ignoring_ports(proj, s.pre_erased))
            fail(rep.containment, "recovery did not restore the prior configuration: " + a.id());
        } catch (const std::exception& e) {
          fail(rep.containment, e.what());
          skip = true;
        }
      } else if (entered_block(next)) {
        try {
          GlobalConfig pre = detail::erase_config(orig, sup, info, s.config);
          Interaction p = strip(a);
          if (!in_orig(pre, p))
            fail(rep.containment, "recoverable step " + p.id() + " not enabled originally");
          n.phase = 1;
          n.pre_erased = pre;
          n.expected = apply_interaction(orig, pre, p);
        } catch (const std::exception& e) {
          fail(rep.containment, e.what());
          skip = true;
        }
      } else {
        try {
          GlobalConfig pre = detail::erase_config(orig, sup, info, s.config);
          GlobalConfig proj = detail::erase_config(orig, sup, info, next);
          Interaction p = strip(a);
          if (!in_orig(pre, p) ||
              !detail::same_ignoring_ports(apply_interaction(orig, pre, p), proj))
            fail(rep.containment, "pass-through step " + p.id() + " diverges from the original");
          const OracleTransition* t = oracle_step(o, s.theta, orig, proj);
          n.theta = t->to;
        } catch (const std::exception& e) {
          fail(rep.containment, e.what());
          skip = true;
        }
      }
      if (skip) continue;
      if (seen.size() >= state_bound) {
        rep.truncated = true;
        continue;
      }
      if (seen.insert(n).second) todo.push_back(std::move(n));
    }
  }

  // completeness: replay every short good original run into the supervised one
  struct Frame {
    GlobalConfig orig_cfg;
    GlobalConfig sup_cfg;
    std::string theta;
    size_t depth;
  };
  GlobalConfig sup0 = initial_config(sup);
  {
    // settle the initial synchronization first
    auto enabled = enabled_interactions(sup, sup0, sup_order);
    for (const auto& a : enabled)
      if (a.contains(info.monitor + ".pm")) {
        sup0 = apply_interaction(sup, sup0, a);
        break;
      }
  }
  std::deque<Frame> stack{Frame{initial_config(orig), sup0, o.initial, 0}};
  while (!stack.empty() && rep.completeness) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (f.depth >= replay_depth) continue;
    for (const auto& a : enabled_interactions(orig, f.orig_cfg, orig_order)) {
      GlobalConfig onext = apply_interaction(orig, f.orig_cfg, a);
      const OracleTransition* t;
      try {
        t = oracle_step(o, f.theta, orig, onext);
      } catch (const std::exception& e) {
        fail(rep.completeness, e.what());
        break;
      }
      if (!good_verdict(transition_verdict(o, *t))) continue; // only good runs replay
      // find the supervised counterpart of a
      auto sup_enabled = enabled_interactions(sup, f.sup_cfg, sup_order);
      const Interaction* match = nullptr;
      for (const auto& sa : sup_enabled)
        if (sa.connector == a.connector && strip(sa) == a) match = &sa;
      if (!match) {
        fail(rep.completeness, "original step " + a.id() + " has no supervised counterpart");
        break;
      }
      GlobalConfig snext = apply_interaction(sup, f.sup_cfg, *match);
      if (entered_block(snext)) {
        bool advanced = false;
        for (int hop = 0; hop < 2; ++hop) {
          const char* want = hop == 0 ? ".pm" : ".pc";
          advanced = false;
          for (const auto& sa : enabled_interactions(sup, snext, sup_order))
            if (sa.contains(info.monitor + want)) {
              snext = apply_interaction(sup, snext, sa);
              advanced = true;
              break;
            }
          if (!advanced) break;
        }
        if (!advanced) {
          fail(rep.completeness, "good step " + a.id() + " could not continue when replayed");
          break;
        }
      }
      stack.push_back(Frame{std::move(onext), std::move(snext), t->to, f.depth + 1});
    }
  }
  return rep;
}

} // namespace rebip

#endif
