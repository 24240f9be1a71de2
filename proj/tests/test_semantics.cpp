#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <rebip/semantics.hpp>

#include "helpers.hpp"

using namespace rebip;

namespace {

const Interaction& only(const std::vector<Interaction>& xs) {
  REQUIRE(xs.size() == 1);
  return xs.front();
}

std::set<std::string> ids(const std::vector<Interaction>& xs) {
  std::set<std::string> out;
  for (const auto& a : xs) out.insert(a.id());
  return out;
}

} // namespace

TEST_CASE("initial configuration and basic stepping") {
  auto sys = testutil::make_pair_system();
  GlobalConfig g = initial_config(sys);
  CHECK(g.locals[0].loc == "l0");
  CHECK(g.locals[0].vals.at("x").as_int() == 1);
  CHECK(!g.locals[0].last_port);

  auto en = enabled_interactions(sys, g);
  const Interaction& a = only(en);
  CHECK(a.ports == std::vector<std::string>{"a.p", "b.q"});

  GlobalConfig g2 = apply_interaction(sys, g, a);
  CHECK(g2.locals[0].loc == "l1");
  CHECK(g2.locals[1].loc == "m1");
  CHECK(g2.locals[0].last_port == "p");
  CHECK(g2.locals[1].last_port == "q");
}

TEST_CASE("transfers read pre-values and write in order") {
  auto sys = testutil::make_pair_system();
  // swap a.x and b.y across the connector: both right-hand sides must see the
  // values from before the interaction
  sys.connectors[0].transfer = {parse_assignment("a.x := b.y"),
                                parse_assignment("b.y := a.x")};
  GlobalConfig g = initial_config(sys);
  GlobalConfig g2 = apply_interaction(sys, g, only(enabled_interactions(sys, g)));
  CHECK(g2.locals[0].vals.at("x").as_int() == 10);
  CHECK(g2.locals[1].vals.at("y").as_int() == 1);

  SUBCASE("later assignments overwrite earlier ones") {
    sys.connectors[0].transfer = {parse_assignment("a.x := 5"),
                                  parse_assignment("a.x := b.y + 1")};
    GlobalConfig g3 = apply_interaction(sys, g, only(enabled_interactions(sys, g)));
    CHECK(g3.locals[0].vals.at("x").as_int() == 11);
  }
}

TEST_CASE("transition updates run after the transfer") {
  auto sys = testutil::make_pair_system();
  sys.connectors[0].transfer = {parse_assignment("a.x := 100")};
  sys.components[0].transitions[0].func = {parse_assignment("x := x + 1")};
  GlobalConfig g = initial_config(sys);
  GlobalConfig g2 = apply_interaction(sys, g, only(enabled_interactions(sys, g)));
  CHECK(g2.locals[0].vals.at("x").as_int() == 101);
}

TEST_CASE("partial interactions skip assignments reading absent ports") {
  auto sys = testutil::make_pair_system();
  sys.connectors[0].triggers = {"a.p"};
  sys.connectors[0].transfer = {parse_assignment("a.x := b.y")};
  // park b so only the partial interaction {a.p} is enabled
  sys.components[1].transitions.clear();
  GlobalConfig g = initial_config(sys);
  auto en = enabled_interactions(sys, g);
  const Interaction& a = only(en);
  CHECK(a.ports == std::vector<std::string>{"a.p"});
  GlobalConfig g2 = apply_interaction(sys, g, a);
  CHECK(g2.locals[0].vals.at("x").as_int() == 1); // assignment skipped, not an error
}

TEST_CASE("connector guards filter interactions") {
  auto sys = testutil::make_pair_system();
  sys.connectors[0].guard = parse_expr("a.x > 5");
  GlobalConfig g = initial_config(sys);
  CHECK(enabled_interactions(sys, g).empty());
  g.locals[0].vals["x"] = Value(int64_t{6});
  CHECK(enabled_interactions(sys, g).size() == 1);
}

TEST_CASE("first enabled transition in declaration order fires") {
  auto sys = testutil::make_pair_system();
  auto& comp = sys.components[0];
  comp.transitions.insert(comp.transitions.begin(),
                          Transition{"l0", "p", parse_expr("x > 0"), {parse_assignment("x := 7")},
                                     "l1"});
  GlobalConfig g = initial_config(sys);
  GlobalConfig g2 = apply_interaction(sys, g, only(enabled_interactions(sys, g)));
  CHECK(g2.locals[0].vals.at("x").as_int() == 7);
}

TEST_CASE("maximal progress keeps only the largest enabled interaction") {
  System sys;
  for (int i = 0; i < 3; ++i) {
    AtomicComponent c;
    c.name = "c" + std::to_string(i);
    c.ports = {Port{"p", {}}};
    c.locations = {"l"};
    c.initial = "l";
    c.transitions = {Transition{"l", "p", expr_true(), {}, "l"}};
    sys.components.push_back(c);
  }
  Connector b;
  b.name = "bcast";
  b.guard = expr_true();
  b.ports = {{"c0", "p"}, {"c1", "p"}, {"c2", "p"}};
  b.triggers = {"c0.p"};
  sys.connectors.push_back(b);

  GlobalConfig g = initial_config(sys);
  auto en = enabled_interactions(sys, g);
  CHECK(ids(en) == std::set<std::string>{"bcast:{c0.p,c1.p,c2.p}"});

  SUBCASE("a disabled member shrinks the maximal interaction") {
    sys.components[2].transitions[0].guard = parse_expr("false");
    auto en2 = enabled_interactions(sys, initial_config(sys));
    CHECK(ids(en2) == std::set<std::string>{"bcast:{c0.p,c1.p}"});
  }
  SUBCASE("declared priority can invert maximal progress") {
    sys.connectors[0].ports.pop_back(); // two ports keep the inversion acyclic
    sys.components.pop_back();
    sys.priorities.pairs = {{"bcast:{c0.p,c1.p}", "bcast:{c0.p}"}};
    auto en2 = enabled_interactions(sys, initial_config(sys));
    CHECK(ids(en2) == std::set<std::string>{"bcast:{c0.p}"});
  }
}

TEST_CASE("the maximal-progress shortcut agrees with subset enumeration") {
  // same connector twice: once with a literally-true guard (shortcut path)
  // and once with an equivalent but non-literal guard (enumeration path)
  System sys;
  for (int i = 0; i < 6; ++i) {
    AtomicComponent c;
    c.name = "c" + std::to_string(i);
    c.ports = {Port{"p", {}}};
    c.locations = {"l", "m"};
    c.initial = "l";
    // odd components are disabled half the time via location
    c.transitions = {Transition{"l", "p", expr_true(), {}, i % 2 ? "m" : "l"}};
    sys.components.push_back(c);
  }
  Connector b;
  b.name = "bcast";
  b.guard = expr_true();
  for (int i = 0; i < 6; ++i) b.ports.push_back({"c" + std::to_string(i), "p"});
  b.triggers = {"c0.p", "c3.p"};
  sys.connectors.push_back(b);

  System slow = sys;
  slow.connectors[0].guard = parse_expr("1 = 1");

  GlobalConfig g = initial_config(sys);
  for (int step = 0; step < 3; ++step) {
    auto fast = enabled_interactions(sys, g);
    auto ref = enabled_interactions(slow, g);
    CHECK(ids(fast) == ids(ref));
    REQUIRE(!fast.empty());
    g = apply_interaction(sys, g, fast.front());
  }
}

TEST_CASE("declared connector priorities suppress lower interactions") {
  System sys;
  AtomicComponent c;
  c.name = "c0";
  c.ports = {Port{"p", {}}, Port{"q", {}}};
  c.locations = {"l"};
  c.initial = "l";
  c.transitions = {Transition{"l", "p", expr_true(), {}, "l"},
                   Transition{"l", "q", expr_true(), {}, "l"}};
  sys.components.push_back(c);
  Connector a, b;
  a.name = "a";
  a.guard = expr_true();
  a.ports = {{"c0", "p"}};
  b.name = "b";
  b.guard = expr_true();
  b.ports = {{"c0", "q"}};
  sys.connectors = {a, b};

  CHECK(ids(enabled_interactions(sys, initial_config(sys))).size() == 2);
  sys.priorities.pairs = {{"a", "b"}};
  CHECK(ids(enabled_interactions(sys, initial_config(sys))) ==
        std::set<std::string>{"b:{c0.q}"});

  SUBCASE("priorities close transitively") {
    Connector d = a;
    d.name = "d";
    d.ports = {{"c0", "p"}};
    sys.connectors.push_back(d);
    sys.priorities.pairs = {{"d", "a"}, {"a", "b"}};
    auto en = enabled_interactions(sys, initial_config(sys));
    CHECK(ids(en) == std::set<std::string>{"b:{c0.q}"});
  }
}

TEST_CASE("philosophers without supervision deadlock") {
  auto b = make_philosophers(2);
  auto ex = explore(b.system);
  CHECK(!ex.truncated);
  CHECK(ex.reachable.size() == 105);
  REQUIRE(!ex.deadlocks.empty());
  // every deadlock has both philosophers holding one fork
  for (const auto& d : ex.deadlocks) {
    CHECK(d.locals[0].loc == "r");
    CHECK(d.locals[1].loc == "r");
  }
  size_t best = SIZE_MAX;
  for (const auto& d : ex.deadlocks) best = std::min(best, ex.depth.at(d));
  CHECK(best == 2);

  LexPolicy lex;
  auto res = simulate(b.system, lex, 100, nullptr);
  CHECK(res.terminal == Terminal::Deadlock);
  CHECK(res.run.steps.size() <= 4);
}

TEST_CASE("bounded exploration reports truncation") {
  auto b = make_philosophers(2);
  auto ex = explore(b.system, 10);
  CHECK(ex.truncated);
  CHECK(ex.reachable.size() == 10);
}

TEST_CASE("random simulation is reproducible per seed") {
  auto b = make_philosophers(3);
  RandomPolicy p1(123), p2(123), p3(321);
  auto r1 = simulate(b.system, p1, 50, nullptr);
  auto r2 = simulate(b.system, p2, 50, nullptr);
  auto r3 = simulate(b.system, p3, 50, nullptr);
  REQUIRE(r1.run.steps.size() == r2.run.steps.size());
  for (size_t i = 0; i < r1.run.steps.size(); ++i)
    CHECK(r1.run.steps[i] == r2.run.steps[i]);
  CHECK(r1.run.configs.back() == r2.run.configs.back());
  bool differs = r1.run.steps.size() != r3.run.steps.size();
  for (size_t i = 0; !differs && i < r1.run.steps.size(); ++i)
    differs = !(r1.run.steps[i] == r3.run.steps[i]);
  CHECK(differs); // 3 philosophers offer real choice, seeds should diverge
}

TEST_CASE("traces serialize one record per step") {
  auto sys = testutil::make_pair_system();
  LexPolicy lex;
  auto res = simulate(sys, lex, 3, nullptr);
  std::ostringstream out;
  write_trace(out, sys, res);
  std::istringstream in(out.str());
  std::string line;
  size_t k = 0;
  while (std::getline(in, line)) {
    json rec = json::parse(line);
    CHECK(rec.at("step") == k + 1);
    CHECK(rec.at("interaction").is_array());
    CHECK(rec.at("config").contains("a"));
    CHECK(rec.at("config").at("a").contains("loc"));
    CHECK(rec.at("config").at("a").contains("last_port"));
    CHECK(rec.at("config").at("a").contains("vars"));
    bool last = rec.at("terminal").is_string();
    CHECK(last == (k + 1 == res.run.steps.size()));
    if (last) CHECK(rec.at("terminal") == "max_steps");
    ++k;
  }
  CHECK(k == res.run.steps.size());
}

TEST_CASE("simulation honours stop conditions") {
  auto sys = testutil::make_pair_system();
  RandomPolicy p(5);
  auto res = simulate(sys, p, 1000,
                      [](const Run& r) { return r.steps.size() >= 7; });
  CHECK(res.terminal == Terminal::Stopped);
  CHECK(res.run.steps.size() == 7);
}
