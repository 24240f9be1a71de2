#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <rebip/property.hpp>

#include "helpers.hpp"

using namespace rebip;
using testutil::letter_oracle;

TEST_CASE("events evaluate over component state") {
  auto sys = testutil::make_pair_system();
  GlobalConfig g = initial_config(sys);
  CHECK(eval_event(parse_event("a.loc = \"l0\""), sys, g));
  CHECK(eval_event(parse_event("a.x = 1 && b.y = 10"), sys, g));
  CHECK(eval_event(parse_event("a.port = \"null\""), sys, g));
  g.locals[0].last_port = "p";
  CHECK(eval_event(parse_event("a.port = \"p\""), sys, g));
}

TEST_CASE("oracle stepping is deterministic and complete at observation time") {
  auto b = make_philosophers(2);
  GlobalConfig g = initial_config(b.system);
  const OracleTransition* t = oracle_step(b.oracle, "s", b.system, g);
  REQUIRE(t);
  CHECK(t->to == "s");
  CHECK(transition_verdict(b.oracle, *t) == Verdict::TopC);

  g.locals[0].loc = "r";
  g.locals[1].loc = "r";
  const OracleTransition* bad = oracle_step(b.oracle, "s", b.system, g);
  REQUIRE(bad);
  CHECK(bad->to == "bad");
  CHECK(transition_verdict(b.oracle, *bad) == Verdict::Bot); // output override

  SUBCASE("overlapping events are rejected") {
    Oracle o = b.oracle;
    o.transitions.push_back({"s", parse_event("p0.loc = \"init\""), "s", {}});
    CHECK_THROWS_AS(oracle_step(o, "s", b.system, initial_config(b.system)), OracleError);
  }
  SUBCASE("a hole in the event cover is rejected") {
    Oracle o = b.oracle;
    o.transitions.erase(o.transitions.begin()); // drop the s -> bad edge
    GlobalConfig h = initial_config(b.system);
    h.locals[0].loc = "r";
    h.locals[1].loc = "r";
    CHECK_THROWS_AS(oracle_step(o, "s", b.system, h), OracleError);
  }
}

TEST_CASE("verdicts derive from acceptance and reachability") {
  // good <-> shaky -> doomed -> dead, with dead able to crawl back nowhere
  auto o = letter_oracle({{"good", true}, {"shaky", true}, {"doomed", false}, {"dead", false}},
                         "good",
                         {{"good", "a", "good"},
                          {"good", "b", "shaky"},
                          {"shaky", "a", "good"},
                          {"shaky", "b", "doomed"},
                          {"doomed", "a", "shaky"},
                          {"doomed", "b", "dead"},
                          {"dead", "a", "dead"},
                          {"dead", "b", "dead"}});
  CHECK(state_verdict(o, "good") == Verdict::TopC);  // accepting, can reach rejecting
  CHECK(state_verdict(o, "shaky") == Verdict::TopC);
  CHECK(state_verdict(o, "doomed") == Verdict::BotC); // rejecting, can recover
  CHECK(state_verdict(o, "dead") == Verdict::Bot);    // rejecting sink

  auto sink = letter_oracle({{"q", true}}, "q", {{"q", "a", "q"}});
  CHECK(state_verdict(sink, "q") == Verdict::Top); // accepting, never leaves acceptance
}

TEST_CASE("safety means no currently-false-but-recoverable state") {
  auto b = make_philosophers(2);
  CHECK(is_safety(b.oracle));
  auto r = make_robots(2, 2);
  CHECK(is_safety(r.oracle));

  auto recoverable = letter_oracle({{"ok", true}, {"oops", false}}, "ok",
                                   {{"ok", "a", "oops"},
                                    {"ok", "b", "ok"},
                                    {"oops", "a", "oops"},
                                    {"oops", "b", "ok"}});
  CHECK(!is_safety(recoverable));
  CHECK(state_verdict(recoverable, "oops") == Verdict::BotC);
}

TEST_CASE("stutter invariance survives letter duplication, parity does not") {
  auto b = make_philosophers(2);
  CHECK(is_stutter_invariant(b.oracle));

  // parity: membership flips on every occurrence of "a"
  auto parity = letter_oracle({{"even", true}, {"odd", false}}, "even",
                              {{"even", "a", "odd"}, {"odd", "a", "even"}});
  CHECK(!is_stutter_invariant(parity));

  // duplication-insensitive two-letter property
  auto two = letter_oracle({{"p", true}, {"q", true}}, "p",
                           {{"p", "a", "q"}, {"p", "b", "p"},
                            {"q", "a", "q"}, {"q", "b", "p"}});
  CHECK(is_stutter_invariant(two));
}

TEST_CASE("enforceability bound counts consecutive recoverable-bad states") {
  auto b = make_philosophers(2);
  REQUIRE(classify_oracle(b.oracle).k);
  CHECK(*classify_oracle(b.oracle).k == 1);

  // one recoverable bad state in the only path: bound 2
  auto one = letter_oracle({{"ok", true}, {"dip", false}, {"back", true}}, "ok",
                           {{"ok", "a", "dip"}, {"ok", "b", "ok"},
                            {"dip", "a", "dip"}, {"dip", "b", "back"},
                            {"back", "a", "back"}, {"back", "b", "back"}});
  // "dip" loops on itself through recoverable territory: that a-loop makes the
  // bad stretch unbounded unless the loop is cut
  auto k_loop = enforceability_k(one);
  CHECK(!k_loop);

  auto cut = letter_oracle({{"ok", true}, {"dip", false}, {"back", true}}, "ok",
                           {{"ok", "a", "dip"}, {"ok", "b", "ok"},
                            {"dip", "a", "back"}, {"dip", "b", "back"},
                            {"back", "a", "back"}, {"back", "b", "back"}});
  auto k2 = enforceability_k(cut);
  REQUIRE(k2);
  CHECK(*k2 == 2);
  CHECK(testutil::brute_k(cut, 6) == 2);

  // two chained recoverable-bad states: bound 3
  auto chain = letter_oracle({{"ok", true}, {"d1", false}, {"d2", false}, {"back", true}}, "ok",
                             {{"ok", "a", "d1"}, {"ok", "b", "ok"},
                              {"d1", "a", "d2"}, {"d1", "b", "back"},
                              {"d2", "a", "back"}, {"d2", "b", "back"},
                              {"back", "a", "back"}, {"back", "b", "back"}});
  auto k3 = enforceability_k(chain);
  REQUIRE(k3);
  CHECK(*k3 == 3);
  CHECK(testutil::brute_k(chain, 6) == 3);
}

TEST_CASE("enforceability agrees with brute-force word search on random oracles") {
  std::mt19937_64 rng(2024);
  std::vector<std::string> alphabet{"a", "b"};
  for (int trial = 0; trial < 30; ++trial) {
    Oracle o = testutil::random_safety_oracle(rng, alphabet, 5);
    auto k = enforceability_k(o);
    REQUIRE(k);
    CHECK(*k == 1); // safety oracles never pass through a recoverable bad state
    CHECK(testutil::brute_k(o, 6) == 1);
    CHECK(is_safety(o));
  }
}

TEST_CASE("verdict sequences follow a run") {
  auto b = make_philosophers(2);
  detail::PriorityOrder order(b.system);
  GlobalConfig g = initial_config(b.system);
  std::vector<GlobalConfig> cfgs{g};
  LexPolicy lex;
  auto res = simulate(b.system, lex, 10, nullptr); // deadlocks at both-at-r
  auto verdicts = evaluate_sequence(b.oracle, b.system, res.run.configs);
  REQUIRE(verdicts.size() == res.run.configs.size());
  CHECK(verdicts.front() == Verdict::TopC);
  CHECK(verdicts.back() == Verdict::Bot); // the deadlock state violates the property
}

TEST_CASE("oracle classification flags tautological events") {
  auto taut = letter_oracle({{"q", true}}, "q", {{"q", "true", "q"}});
  auto c = classify_oracle(taut);
  CHECK(!c.warnings.empty());
  CHECK(classify_oracle(make_philosophers(2).oracle).warnings.empty());
}

TEST_CASE("oracle JSON round-trips with verdict overrides") {
  auto b = make_philosophers(2);
  json j = oracle_to_json(b.oracle);
  Oracle back = oracle_from_json(j);
  CHECK(oracle_to_json(back) == j);
  CHECK(back.initial == "s");
  CHECK(back.transitions[0].output == "bad");

  SUBCASE("unknown initial state is rejected") {
    json bad = j;
    bad["initial"] = "nope";
    CHECK_THROWS_AS(oracle_from_json(bad), OracleError);
  }
  SUBCASE("transition from unknown state is rejected") {
    json bad = j;
    bad["transitions"][0]["from"] = "ghost";
    CHECK_THROWS_AS(oracle_from_json(bad), OracleError);
  }
}

TEST_CASE("monitored use is extracted from oracle events") {
  auto b = make_philosophers(2);
  auto use = monitored_use(b.oracle, b.system);
  CHECK(use.locs == std::set<std::string>{"p0", "p1"});
  CHECK(use.vars.empty());
  CHECK(use.ports.empty());
  CHECK(use.components() == std::set<std::string>{"p0", "p1"});

  SUBCASE("unknown references are reported") {
    Oracle o = b.oracle;
    o.transitions.push_back({"s", parse_event("p9.loc = \"r\""), "s", {}});
    CHECK_THROWS_AS(monitored_use(o, b.system), OracleError);
  }
}
