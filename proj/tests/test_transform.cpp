#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <rebip/transform.hpp>
#include <rebip/checks.hpp>

#include "helpers.hpp"

using namespace rebip;

namespace {

bool has_port(const AtomicComponent& c, const std::string& p) {
  return c.find_port(p) != nullptr;
}

bool has_loc(const AtomicComponent& c, const std::string& l) {
  return std::find(c.locations.begin(), c.locations.end(), l) != c.locations.end();
}

} // namespace

TEST_CASE("instrumentation plans select observed components and close over connectors") {
  auto b = make_philosophers(2);
  auto plan = build_plan(b.system, b.oracle, true);

  // philosopher locations are observed, so all their transitions are selected
  for (const auto& name : {"p0", "p1"})
    CHECK(plan.selected.at(name).size() ==
          b.system.find_component(name)->transitions.size());
  // forks are untouched by the property but participate in recoverable
  // interactions, so closure pulls them in
  CHECK(plan.reccomp.count("f0"));
  CHECK(plan.reccomp.count("f1"));
  CHECK(plan.reccomp.count("c0"));
  for (const auto& conn : {"get0", "get1", "left0", "left1", "rel0", "rel1"})
    CHECK(std::find(plan.recinter.begin(), plan.recinter.end(), conn) != plan.recinter.end());
  // the reset interaction only moves the counter after closure already took
  // c0.count; its transition is recoverable too, so reset joins as well
  CHECK(plan.use.locs == std::set<std::string>{"p0", "p1"});
}

TEST_CASE("optimization matters only when something is unobserved") {
  auto b = make_philosophers(2);
  auto opt = build_plan(b.system, b.oracle, true);
  auto all = build_plan(b.system, b.oracle, false);
  // with the philosophers' locations observed everything ends up recoverable
  // either way; the unoptimized plan must be a superset
  for (const auto& comp : b.system.components) {
    auto it = opt.rectrans.find(comp.name);
    if (it != opt.rectrans.end())
      for (size_t t : it->second) CHECK(all.rectrans.at(comp.name).count(t));
    CHECK(all.rectrans.at(comp.name).size() == comp.transitions.size());
  }
}

TEST_CASE("atomic instrumentation splits recoverable transitions") {
  auto b = make_philosophers(2);
  auto sup = supervise(b.system, b.oracle, false, true);
  const AtomicComponent* p0 = sup.system.find_component("p0");
  REQUIRE(p0);

  // shadow variable reporting the location to the monitor
  CHECK(p0->has_var("loc"));
  CHECK(has_port(*p0, "pm"));
  CHECK(has_port(*p0, "pc"));
  CHECK(has_port(*p0, "pr"));
  // four-way split locations for the init -right-> r transition
  CHECK(has_loc(*p0, "r'"));
  CHECK(has_loc(*p0, "r''"));
  // observed component synchronizes its first observation from a fresh initial
  CHECK(has_loc(*p0, "init0"));
  CHECK(p0->initial == "init0");

  // forks carry no monitored variables: no initial synchronization needed
  const AtomicComponent* f0 = sup.system.find_component("f0");
  REQUIRE(f0);
  CHECK(f0->initial == "init");
  CHECK(has_loc(*f0, "busy'"));
  CHECK(has_loc(*f0, "busy''"));
}

TEST_CASE("recovery restores exactly the variables the transition touched") {
  auto b = make_philosophers(2);
  auto sup = supervise(b.system, b.oracle, false, true);
  const AtomicComponent* c0 = sup.system.find_component("c0");
  REQUIRE(c0);
  CHECK(c0->has_var("x__tmp"));
  bool restores = false;
  for (const auto& t : c0->transitions)
    if (t.port == "pr")
      for (const auto& a : t.func)
        restores |= a.target == "x" && expr_to_string(a.rhs) == "x__tmp";
  CHECK(restores);
}

TEST_CASE("the synthesized monitor mirrors the oracle") {
  auto b = make_philosophers(2);
  auto sup = supervise(b.system, b.oracle, false, true);
  const AtomicComponent* m = sup.system.find_component("monitor");
  REQUIRE(m);
  CHECK(m->initial == "init");
  CHECK(has_loc(*m, "s"));
  CHECK(has_loc(*m, "s'"));
  CHECK(m->has_var("p0.loc"));
  CHECK(m->has_var("p1.loc"));
  CHECK(m->has_var("p0.loc__tmp"));
  // decision edges: continue on the good event, recover on the bad one
  bool cont = false, rec = false;
  for (const auto& t : m->transitions) {
    cont |= t.src == "s" && t.port == "pc";
    rec |= t.src == "s" && t.port == "pr" && t.dest == "s'";
  }
  CHECK(cont);
  CHECK(rec);
}

TEST_CASE("supervision refuses non-enforceable oracles") {
  auto b = make_philosophers(2);
  auto recoverable = testutil::letter_oracle(
      {{"ok", true}, {"oops", false}}, "ok",
      {{"ok", "p0.loc = \"r\"", "oops"}, {"ok", "!(p0.loc = \"r\")", "ok"},
       {"oops", "p0.loc = \"r\"", "ok"}, {"oops", "!(p0.loc = \"r\")", "oops"}});
  CHECK_THROWS_AS(supervise(b.system, recoverable), TransformError);

  auto parity = testutil::letter_oracle(
      {{"even", true}, {"odd", false}}, "even",
      {{"even", "p0.loc = \"r\"", "odd"}, {"even", "!(p0.loc = \"r\")", "even"},
       {"odd", "p0.loc = \"r\"", "even"}, {"odd", "!(p0.loc = \"r\")", "odd"}});
  CHECK_THROWS_AS(supervise(b.system, parity), TransformError);
}

TEST_CASE("supervision leaves untouched systems alone with a warning") {
  auto b = make_philosophers(2);
  // property over a component with no transitions selected and no closure
  Oracle o = testutil::letter_oracle({{"ok", true}, {"bad", false}}, "ok",
                                     {{"ok", "false", "bad"}, {"ok", "!(false)", "ok"},
                                      {"bad", "false", "bad"}, {"bad", "!(false)", "bad"}});
  auto sup = supervise(b.system, o, false, true);
  REQUIRE(!sup.warnings.empty());
  CHECK(sup.warnings.front().find("never synchronizes") != std::string::npos);
  // only the (inert) monitor component is added; nothing is instrumented
  CHECK(sup.system.components.size() == b.system.components.size() + 1);
  for (const auto& c : b.system.components)
    CHECK(sup.system.find_component(c.name)->ports.size() == c.ports.size());
}

TEST_CASE("supervised systems validate and carry provenance") {
  auto b = make_philosophers(2);
  auto sup = supervise(b.system, b.oracle, true, true);
  CHECK(validate_model(sup.system).empty());
  CHECK(!sup.provenance.empty());
  CHECK(sup.info.monitor == "monitor");
  CHECK(sup.info.disabler == "disabler");
  CHECK(!sup.info.gm.empty());
  CHECK(!sup.info.gc1.empty());
  CHECK(!sup.info.gr2.empty());
  // monitor family outranks every original connector
  bool raised = false;
  for (const auto& [lo, hi] : sup.system.priorities.pairs)
    raised |= lo == "get0" && hi == sup.info.gm;
  CHECK(raised);

  json j = supervision_info_to_json(sup.info);
  auto back = supervision_info_from_json(j);
  CHECK(back.monitor == sup.info.monitor);
  CHECK(back.disabler == sup.info.disabler);
  CHECK(back.recinter == sup.info.recinter);
  CHECK(back.comps.size() == sup.info.comps.size());
  CHECK(back.comps.at("p0").lm_locs == sup.info.comps.at("p0").lm_locs);
}

TEST_CASE("the disabler blocks the rolled-back interaction until the next continue") {
  auto b = make_philosophers(2);
  auto sup = supervise(b.system, b.oracle, true, true);
  const AtomicComponent* d = sup.system.find_component("disabler");
  REQUIRE(d);
  CHECK(d->has_var("id"));
  for (const auto& conn : sup.info.recinter) {
    bool wired = false;
    const Connector* c = sup.system.find_connector(conn);
    REQUIRE(c);
    for (const auto& p : c->ports) wired |= p.owner == "disabler";
    CHECK(wired);
  }

  detail::PriorityOrder order(sup.system);
  RandomPolicy policy(11);
  GlobalConfig g = initial_config(sup.system);
  std::string blocked; // connector recovered from, "" when all allowed
  for (int step = 0; step < 2000; ++step) {
    auto en = enabled_interactions(sup.system, g, order);
    if (en.empty()) break;
    if (!blocked.empty())
      for (const auto& a : en) CHECK(a.connector != blocked);
    const Interaction& a = policy.choose(en);
    if (a.contains("monitor.pr")) {
      // the block being cancelled was opened by the last recinter interaction
      int di = sup.system.component_index("disabler");
      GlobalConfig g2 = apply_interaction(sup.system, g, a);
      int64_t id = g2.locals[di].vals.at("id").as_int();
      blocked = sup.info.recinter.at(static_cast<size_t>(id));
      g = g2;
      continue;
    }
    if (a.contains("monitor.pc")) blocked.clear();
    g = apply_interaction(sup.system, g, a);
  }
}

TEST_CASE("supervised runs project onto original runs") {
  for (int seed : {1, 2, 3}) {
    auto b = make_philosophers(3);
    auto sup = supervise(b.system, b.oracle, false, true);
    RandomPolicy policy(seed);
    SupRunOptions opts;
    opts.correct_target = 150;
    auto st = run_supervised(sup.system, sup.info, policy, opts);
    REQUIRE(!st.deadlock);
    auto proj = project_run(b.system, sup.system, sup.info, st.run);
    CHECK(proj.steps.size() == st.correct_steps);

    detail::PriorityOrder order(b.system);
    GlobalConfig g = initial_config(b.system);
    for (size_t i = 0; i < proj.steps.size(); ++i) {
      auto en = enabled_interactions(b.system, g, order);
      bool found = std::find(en.begin(), en.end(), proj.steps[i]) != en.end();
      REQUIRE(found);
      g = apply_interaction(b.system, g, proj.steps[i]);
      CHECK(g == proj.configs[i + 1]);
    }
  }
}

TEST_CASE("projection rejects runs that stop inside a block") {
  auto b = make_philosophers(2);
  auto sup = supervise(b.system, b.oracle, false, true);
  detail::PriorityOrder order(sup.system);
  GlobalConfig g = initial_config(sup.system);
  Run run;
  run.configs.push_back(g);
  LexPolicy lex;
  // walk two steps: initial sync then a recoverable step, leaving p0 at r'
  for (int i = 0; i < 2; ++i) {
    auto en = enabled_interactions(sup.system, g, order);
    REQUIRE(!en.empty());
    g = apply_interaction(sup.system, g, en.front());
    run.steps.push_back(en.front());
    run.configs.push_back(g);
  }
  CHECK_THROWS_AS(project_run(b.system, sup.system, sup.info, run), TransformError);
}

TEST_CASE("erasure strips supervision state and rejects mid-block configs") {
  auto b = make_philosophers(2);
  auto sup = supervise(b.system, b.oracle, false, true);
  GlobalConfig g0 = initial_config(sup.system);
  auto erased = detail::erase_config(b.system, sup.system, sup.info, g0);
  CHECK(erased.locals[b.system.component_index("p0")].loc == "init"); // init0 maps back
  CHECK(erased.locals[b.system.component_index("c0")].vals.count("x"));
  CHECK(!erased.locals[b.system.component_index("c0")].vals.count("x__tmp"));

  GlobalConfig mid = g0;
  mid.locals[sup.system.component_index("p0")].loc = "r'";
  CHECK_THROWS_AS(detail::erase_config(b.system, sup.system, sup.info, mid), TransformError);
}

TEST_CASE("exhaustive proposition checks hold for both integration modes") {
  auto b = make_philosophers(2);
  for (bool disabler : {false, true}) {
    auto sup = supervise(b.system, b.oracle, disabler, true);
    auto rep = check_propositions(b.system, sup.system, sup.info, b.oracle);
    CHECK(rep.soundness);
    CHECK(rep.containment);
    CHECK(rep.block_shape);
    CHECK(rep.homogeneity);
    CHECK(rep.completeness);
    CHECK(!rep.truncated);
  }
}

TEST_CASE("a broken backup is caught by the proposition checks") {
  auto b = make_philosophers(2);
  auto sup = supervise(b.system, b.oracle, false, true);
  // sabotage: make p1 recover to the wrong place, so rollback no longer
  // restores the pre-violation configuration
  System& s = sup.system;
  int p1 = s.component_index("p1");
  for (auto& t : s.components[p1].transitions)
    if (t.port == "pr" && t.dest == "init") t.dest = "rl";
  auto rep = check_propositions(b.system, s, sup.info, b.oracle);
  CHECK(!rep.all_pass());
  CHECK(!rep.counterexample.empty());
}

TEST_CASE("a monitor that never recovers is caught by the soundness check") {
  auto b = make_philosophers(2);
  auto sup = supervise(b.system, b.oracle, false, true);
  System& s = sup.system;
  int m = s.component_index("monitor");
  // sabotage: turn the recover decision into a continue on the bad event
  for (auto& t : s.components[m].transitions)
    if (t.port == "pr") t.port = "pc";
  for (auto& p : s.components[m].ports)
    if (p.name == "pr") p.name = "pr_unused";
  // rewire the recover connectors to the renamed port so the model stays valid
  for (auto& c : s.connectors)
    for (auto& p : c.ports)
      if (p.owner == "monitor" && p.port == "pr") p.port = "pr_unused";
  auto rep = check_propositions(b.system, s, sup.info, b.oracle);
  CHECK(!rep.soundness);
}
