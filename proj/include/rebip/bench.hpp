#ifndef REBIP_BENCH_HPP
#define REBIP_BENCH_HPP

#include "rebip/transform.hpp"

namespace rebip {

struct BenchError : std::runtime_error {
  explicit BenchError(const std::string& m) : std::runtime_error(m) {}
};

struct Bench {
  System system;
  Oracle oracle;
};

// ---------------------------------------------------------------------------
// Dining philosophers
// ---------------------------------------------------------------------------

/// n philosophers, n forks, and a counter tallying how often philosopher 0
/// grabs its right fork (with a guarded reset). Each philosopher takes its
/// right fork, then its left, then releases both.
inline Bench make_philosophers(int n) {
  if (n < 2) throw BenchError("philosophers benchmark needs at least 2 philosophers");
  Bench b;
  auto g = [](const std::string& s) { return parse_expr(s); };

  for (int i = 0; i < n; ++i) {
    AtomicComponent p;
    p.name = "p" + std::to_string(i);
    p.ports = {Port{"right", {}}, Port{"left", {}}, Port{"release", {}}};
    p.locations = {"init", "r", "rl"};
    p.initial = "init";
    p.transitions = {Transition{"init", "right", expr_true(), {}, "r"},
                     Transition{"r", "left", expr_true(), {}, "rl"},
                     Transition{"rl", "release", expr_true(), {}, "init"}};
    b.system.components.push_back(std::move(p));
  }
  for (int i = 0; i < n; ++i) {
    AtomicComponent f;
    f.name = "f" + std::to_string(i);
    f.ports = {Port{"get", {}}, Port{"release", {}}};
    f.locations = {"init", "busy"};
    f.initial = "init";
    f.transitions = {Transition{"init", "get", expr_true(), {}, "busy"},
                     Transition{"busy", "release", expr_true(), {}, "init"}};
    b.system.components.push_back(std::move(f));
  }
  {
    AtomicComponent c;
    c.name = "c0";
    c.variables = {{"x", Value(int64_t{0})}};
    c.ports = {Port{"count", {}}, Port{"reset", {}}};
    c.locations = {"init"};
    c.initial = "init";
    c.transitions = {
        Transition{"init", "count", g("x < 10"), {parse_assignment("x := x + 1")}, "init"},
        Transition{"init", "reset", g("x >= 10"), {parse_assignment("x := 0")}, "init"}};
    b.system.components.push_back(std::move(c));
  }

  for (int i = 0; i < n; ++i) {
    std::string si = std::to_string(i), sj = std::to_string((i + 1) % n);
    Connector get;
    get.name = "get" + si;
    get.guard = expr_true();
    get.ports = {PortRef{"p" + si, "right"}, PortRef{"f" + si, "get"}};
    if (i == 0) get.ports.push_back(PortRef{"c0", "count"});
    b.system.connectors.push_back(std::move(get));

    Connector left;
    left.name = "left" + si;
    left.guard = expr_true();
    left.ports = {PortRef{"p" + si, "left"}, PortRef{"f" + sj, "get"}};
    b.system.connectors.push_back(std::move(left));

    Connector rel;
    rel.name = "rel" + si;
    rel.guard = expr_true();
    rel.ports = {PortRef{"p" + si, "release"}, PortRef{"f" + si, "release"},
                 PortRef{"f" + sj, "release"}};
    b.system.connectors.push_back(std::move(rel));
  }
  Connector reset;
  reset.name = "reset";
  reset.guard = expr_true();
  reset.ports = {PortRef{"c0", "reset"}};
  b.system.connectors.push_back(std::move(reset));

  std::string bad;
  for (int i = 0; i < n; ++i) {
    if (i) bad += " && ";
    bad += "p" + std::to_string(i) + ".loc = \"r\"";
  }
  b.oracle.states = {OracleState{"s", {}, true}, OracleState{"bad", {}, false}};
  b.oracle.initial = "s";
  b.oracle.transitions = {
      OracleTransition{"s", parse_event(bad), "bad", "bad"},
      OracleTransition{"s", parse_event("!(" + bad + ")"), "s", "possiblyGood"},
      OracleTransition{"bad", parse_event(bad), "bad", {}},
      OracleTransition{"bad", parse_event("!(" + bad + ")"), "bad", {}}};
  return b;
}

// ---------------------------------------------------------------------------
// Robots on a grid
// ---------------------------------------------------------------------------

/// k robots on an n*n grid, each with a local start/stop controller, plus a
/// global controller counting active robots. Moves are unary interactions;
/// the oracle flags any two robots sharing a cell.
inline Bench make_robots(int k, int n) {
  if (k < 2) throw BenchError("robots benchmark needs at least 2 robots");
  if (n < 2) throw BenchError("robots benchmark needs a grid of at least 2x2");
  if (k > n * n) throw BenchError("robots benchmark needs at most one robot per cell");
  Bench b;
  auto lim = std::to_string(n - 1);

  for (int i = 0; i < k; ++i) {
    std::string si = std::to_string(i);
    AtomicComponent r;
    r.name = "R" + si;
    r.variables = {{"x", Value(int64_t(i % n))}, {"y", Value(int64_t(i / n))}};
    r.ports = {Port{"start", {}}, Port{"stop", {}}, Port{"up", {}},
               Port{"down", {}},  Port{"left", {}}, Port{"right", {}}};
    r.locations = {"idle", "active"};
    r.initial = "idle";
    r.transitions = {
        Transition{"idle", "start", expr_true(), {}, "active"},
        Transition{"active", "stop", expr_true(), {}, "idle"},
        Transition{"active", "up", parse_expr("y < " + lim), {parse_assignment("y := y + 1")},
                   "active"},
        Transition{"active", "down", parse_expr("y > 0"), {parse_assignment("y := y - 1")},
                   "active"},
        Transition{"active", "left", parse_expr("x > 0"), {parse_assignment("x := x - 1")},
                   "active"},
        Transition{"active", "right", parse_expr("x < " + lim), {parse_assignment("x := x + 1")},
                   "active"}};
    b.system.components.push_back(std::move(r));

    AtomicComponent c;
    c.name = "C" + si;
    c.ports = {Port{"start", {}}, Port{"stop", {}}};
    c.locations = {"idle", "active"};
    c.initial = "idle";
    c.transitions = {Transition{"idle", "start", expr_true(), {}, "active"},
                     Transition{"active", "stop", expr_true(), {}, "idle"}};
    b.system.components.push_back(std::move(c));
  }
  {
    AtomicComponent c;
    c.name = "C";
    c.variables = {{"active", Value(int64_t{0})}};
    c.ports = {Port{"start", {}}, Port{"stop", {}}};
    c.locations = {"ctl"};
    c.initial = "ctl";
    c.transitions = {
        Transition{"ctl", "start", expr_true(), {parse_assignment("active := active + 1")},
                   "ctl"},
        Transition{"ctl", "stop", parse_expr("active > 0"),
                   {parse_assignment("active := active - 1")}, "ctl"}};
    b.system.components.push_back(std::move(c));
  }

  for (int i = 0; i < k; ++i) {
    std::string si = std::to_string(i);
    for (const std::string& kind : {"start", "stop"}) {
      Connector c;
      c.name = kind + si;
      c.guard = expr_true();
      c.ports = {PortRef{"R" + si, kind}, PortRef{"C" + si, kind}, PortRef{"C", kind}};
      b.system.connectors.push_back(std::move(c));
    }
    for (const std::string& dir : {"up", "down", "left", "right"}) {
      Connector c;
      c.name = dir + si;
      c.guard = expr_true();
      c.ports = {PortRef{"R" + si, dir}};
      b.system.connectors.push_back(std::move(c));
    }
  }

  std::string coll;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      std::string ri = "R" + std::to_string(i), rj = "R" + std::to_string(j);
      if (!coll.empty()) coll += " || ";
      coll += "(" + ri + ".x = " + rj + ".x && " + ri + ".y = " + rj + ".y)";
    }
  b.oracle.states = {OracleState{"ok", {}, true}, OracleState{"bad", {}, false}};
  b.oracle.initial = "ok";
  b.oracle.transitions = {
      OracleTransition{"ok", parse_event(coll), "bad", "bad"},
      OracleTransition{"ok", parse_event("!(" + coll + ")"), "ok", "possiblyGood"},
      OracleTransition{"bad", parse_event(coll), "bad", {}},
      OracleTransition{"bad", parse_event("!(" + coll + ")"), "bad", {}}};
  return b;
}

// ---------------------------------------------------------------------------
// Hand-built systems for the supervision corner cases
// ---------------------------------------------------------------------------

/// One component whose only interaction always violates the property: spin
/// recovery loops forever, a disabler runs out of interactions.
inline Bench make_always_bad() {
  Bench b;
  AtomicComponent c;
  c.name = "b";
  c.variables = {{"x", Value(int64_t{0})}};
  c.ports = {Port{"a", {}}};
  c.locations = {"l"};
  c.initial = "l";
  c.transitions = {Transition{"l", "a", expr_true(), {parse_assignment("x := x + 1")}, "l"}};
  b.system.components.push_back(std::move(c));
  Connector a0;
  a0.name = "a0";
  a0.guard = expr_true();
  a0.ports = {PortRef{"b", "a"}};
  b.system.connectors.push_back(std::move(a0));

  b.oracle.states = {OracleState{"ok", {}, true}, OracleState{"bad", {}, false}};
  b.oracle.initial = "ok";
  b.oracle.transitions = {
      OracleTransition{"ok", parse_event("b.x >= 1"), "bad", "bad"},
      OracleTransition{"ok", parse_event("!(b.x >= 1)"), "ok", "possiblyGood"},
      OracleTransition{"bad", parse_event("b.x >= 1"), "bad", {}},
      OracleTransition{"bad", parse_event("!(b.x >= 1)"), "bad", {}}};
  return b;
}

/// Two self-loop interactions on one component: a0 (sets x to 1, violating
/// the property) outranks a1 (sets x to 0). Only disabling a0 after its
/// rollback ever lets a1 fire.
inline Bench make_priority_inversion() {
  Bench b;
  AtomicComponent c;
  c.name = "B1";
  c.variables = {{"x", Value(int64_t{0})}};
  c.ports = {Port{"pa", {}}, Port{"pb", {}}};
  c.locations = {"l"};
  c.initial = "l";
  c.transitions = {Transition{"l", "pa", expr_true(), {parse_assignment("x := 1")}, "l"},
                   Transition{"l", "pb", expr_true(), {parse_assignment("x := 0")}, "l"}};
  b.system.components.push_back(std::move(c));
  for (const auto& [conn, port] : {std::pair{"a0", "pa"}, {"a1", "pb"}}) {
    Connector a;
    a.name = conn;
    a.guard = expr_true();
    a.ports = {PortRef{"B1", port}};
    b.system.connectors.push_back(std::move(a));
  }
  b.system.priorities.pairs.emplace_back("a1", "a0");

  b.oracle.states = {OracleState{"ok", {}, true}, OracleState{"bad", {}, false}};
  b.oracle.initial = "ok";
  b.oracle.transitions = {
      OracleTransition{"ok", parse_event("B1.x = 1"), "bad", "bad"},
      OracleTransition{"ok", parse_event("!(B1.x = 1)"), "ok", "possiblyGood"},
      OracleTransition{"bad", parse_event("B1.x = 1"), "bad", {}},
      OracleTransition{"bad", parse_event("!(B1.x = 1)"), "bad", {}}};
  return b;
}

} // namespace rebip

#endif
