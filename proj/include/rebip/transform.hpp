#ifndef REBIP_TRANSFORM_HPP
#define REBIP_TRANSFORM_HPP

#include "rebip/property.hpp"

namespace rebip {

struct TransformError : std::runtime_error {
  explicit TransformError(const std::string& m) : std::runtime_error(m) {}
};

// ---------------------------------------------------------------------------
// Instrumentation plan
// ---------------------------------------------------------------------------

struct InstrumentationPlan {
  MonitorUse use;
  std::set<std::string> occur;                        // qualified refs the events read
  std::map<std::string, std::set<size_t>> selected;   // comp -> transition indices
  std::map<std::string, std::set<size_t>> rectrans;   // after connector closure
  std::set<std::string> reccomp;
  std::vector<std::string> recinter;                  // connector names, declaration order
  std::map<std::string, int> index;                   // recinter connector -> id
};

namespace detail {

inline std::set<std::string> transition_touched_vars(const AtomicComponent& c,
                                                     const Transition& t) {
  std::set<std::string> out;
  const Port* p = c.find_port(t.port);
  if (p) out.insert(p->vars.begin(), p->vars.end());
  for (const auto& a : t.func) out.insert(a.target);
  return out;
}

/// Leaf component ports of a connector, through any hierarchy.
inline void leaf_ports(const System& sys, const Connector& c,
                       std::set<std::pair<std::string, std::string>>& out) {
  for (const auto& p : c.ports) {
    const Connector* lower = sys.find_connector(p.owner);
    if (lower)
      leaf_ports(sys, *lower, out);
    else
      out.emplace(p.owner, p.port);
  }
}

} // namespace detail

/// Transitions of one component that can invalidate what the oracle observes:
/// everything if its location or fired port is observed, otherwise the
/// transitions whose updates or port-attached variables touch an observed
/// variable.
inline std::set<size_t> select_transitions(const AtomicComponent& c, const MonitorUse& use) {
  std::set<size_t> out;
  if (use.locs.count(c.name) || use.ports.count(c.name)) {
    for (size_t i = 0; i < c.transitions.size(); ++i) out.insert(i);
    return out;
  }
  auto it = use.vars.find(c.name);
  if (it == use.vars.end()) return out;
  for (size_t i = 0; i < c.transitions.size(); ++i) {
    auto touched = detail::transition_touched_vars(c, c.transitions[i]);
    for (const auto& x : it->second)
      if (touched.count(x)) {
        out.insert(i);
        break;
      }
  }
  return out;
}

/// Connector closure: a transition joins the recoverable set when its port
/// shares a connector with an already recoverable transition's port.
inline std::map<std::string, std::set<size_t>> closure(
    const System& sys, const std::map<std::string, std::set<size_t>>& selected) {
  std::map<std::string, std::set<size_t>> rec = selected;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& conn : sys.connectors) {
      std::set<std::pair<std::string, std::string>> ports;
      detail::leaf_ports(sys, conn, ports);
      bool touched = false;
      for (const auto& [comp, port] : ports) {
        auto it = rec.find(comp);
        if (it == rec.end()) continue;
        const AtomicComponent* c = sys.find_component(comp);
        for (size_t idx : it->second)
          touched |= (c->transitions[idx].port == port);
      }
      if (!touched) continue;
      for (const auto& [comp, port] : ports) {
        const AtomicComponent* c = sys.find_component(comp);
        for (size_t i = 0; i < c->transitions.size(); ++i)
          if (c->transitions[i].port == port && !rec[comp].count(i)) {
            rec[comp].insert(i);
            changed = true;
          }
      }
    }
  }
  for (auto it = rec.begin(); it != rec.end();)
    it = it->second.empty() ? rec.erase(it) : std::next(it);
  return rec;
}

/// Full plan. `optimize` keeps the minimal transition set; without it every
/// transition of every touched component is instrumented.
inline InstrumentationPlan build_plan(const System& sys, const Oracle& o, bool optimize = true) {
  InstrumentationPlan plan;
  plan.use = monitored_use(o, sys);
  for (const auto& [c, vars] : plan.use.vars)
    for (const auto& x : vars) plan.occur.insert(c + "." + x);
  for (const auto& c : plan.use.locs) plan.occur.insert(c + ".loc");
  for (const auto& c : plan.use.ports) plan.occur.insert(c + ".port");

  for (const auto& c : sys.components) {
    auto sel = select_transitions(c, plan.use);
    if (!sel.empty()) plan.selected[c.name] = std::move(sel);
  }
  plan.rectrans = closure(sys, plan.selected);
  if (!optimize) {
    for (auto& [comp, idxs] : plan.rectrans) {
      const AtomicComponent* c = sys.find_component(comp);
      for (size_t i = 0; i < c->transitions.size(); ++i) idxs.insert(i);
    }
    plan.rectrans = closure(sys, plan.rectrans);
  }
  for (const auto& [comp, _] : plan.rectrans) plan.reccomp.insert(comp);

  for (const auto& conn : sys.connectors) {
    std::set<std::pair<std::string, std::string>> ports;
    detail::leaf_ports(sys, conn, ports);
    bool touched = false;
    for (const auto& [comp, port] : ports) {
      auto it = plan.rectrans.find(comp);
      if (it == plan.rectrans.end()) continue;
      const AtomicComponent* c = sys.find_component(comp);
      for (size_t idx : it->second) touched |= (c->transitions[idx].port == port);
    }
    if (touched && !conn.export_id) {
      plan.index[conn.name] = static_cast<int>(plan.recinter.size());
      plan.recinter.push_back(conn.name);
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Component instrumentation
// ---------------------------------------------------------------------------

struct CompInstrumentation {
  std::string pm, pc, pr;                      // fresh port names
  std::string init0;                           // "" when no initial sync edge
  bool shadow_loc = false, shadow_port = false;
  std::map<std::string, std::string> tmp_of;   // var -> backup var
  std::set<std::string> lm_locs, lr_locs;      // fresh intermediate locations
  std::vector<std::string> monvars;            // vars attached to pm
};

namespace detail {

inline std::string fresh_name(std::string base, const std::set<std::string>& used,
                              const std::string& pad) {
  while (used.count(base)) base += pad;
  return base;
}

/// Variables a transition may clobber: its port's attached variables plus its
/// own assignment targets.
inline std::vector<std::string> recvars(const AtomicComponent& c, const Transition& t) {
  auto vars = transition_touched_vars(c, t);
  return {vars.begin(), vars.end()};
}

} // namespace detail

/// Instrument one component: shadow observables, backup variables, the
/// pm/pc/pr ports, the four-way split of every recoverable transition, and
/// the initial synchronization edge when the monitor needs this component's
/// data from the start.
inline AtomicComponent instrument_atomic(const AtomicComponent& in,
                                         const InstrumentationPlan& plan,
                                         CompInstrumentation& ci) {
  AtomicComponent c = in;
  const auto& use = plan.use;
  std::set<std::string> var_names, port_names, loc_names(c.locations.begin(), c.locations.end());
  for (const auto& [n, _] : c.variables) var_names.insert(n);
  for (const auto& p : c.ports) port_names.insert(p.name);

  ci.shadow_loc = use.locs.count(c.name) > 0;
  ci.shadow_port = use.ports.count(c.name) > 0;
  if (ci.shadow_loc) {
    if (var_names.count("loc"))
      throw TransformError("component '" + c.name + "' owns a variable named 'loc', which is "
                           "reserved when its location is observed");
    c.variables.emplace_back("loc", Value(c.initial));
    var_names.insert("loc");
  }
  if (ci.shadow_port) {
    if (var_names.count("port"))
      throw TransformError("component '" + c.name + "' owns a variable named 'port', which is "
                           "reserved when its fired port is observed");
    c.variables.emplace_back("port", Value(kNullPort));
    var_names.insert("port");
  }

  if (ci.shadow_loc) ci.monvars.push_back("loc");
  if (ci.shadow_port) ci.monvars.push_back("port");
  if (auto it = use.vars.find(c.name); it != use.vars.end())
    for (const auto& x : it->second) ci.monvars.push_back(x);

  auto rec_it = plan.rectrans.find(c.name);
  std::set<size_t> rec = rec_it != plan.rectrans.end() ? rec_it->second : std::set<size_t>{};

  // backup copies for everything any recoverable transition may clobber
  std::set<std::string> all_recvars;
  for (size_t idx : rec)
    for (const auto& x : detail::recvars(in, in.transitions[idx])) all_recvars.insert(x);
  for (const auto& x : all_recvars) {
    std::string tmp = detail::fresh_name(x + "__tmp", var_names, "_");
    var_names.insert(tmp);
    ci.tmp_of[x] = tmp;
    c.variables.emplace_back(tmp, in.initial_valuation().at(x));
  }

  ci.pm = detail::fresh_name("pm", port_names, "_");
  port_names.insert(ci.pm);
  ci.pc = detail::fresh_name("pc", port_names, "_");
  port_names.insert(ci.pc);
  ci.pr = detail::fresh_name("pr", port_names, "_");
  port_names.insert(ci.pr);
  c.ports.push_back(Port{ci.pm, ci.monvars});
  c.ports.push_back(Port{ci.pc, {}});
  c.ports.push_back(Port{ci.pr, {}});

  std::vector<Transition> out;
  for (size_t i = 0; i < in.transitions.size(); ++i) {
    const Transition& t = in.transitions[i];
    if (!rec.count(i)) {
      out.push_back(t);
      continue;
    }
    std::string lm = detail::fresh_name(t.dest + "'", loc_names, "'");
    loc_names.insert(lm);
    std::string lr = detail::fresh_name(t.dest + "''", loc_names, "'");
    loc_names.insert(lr);
    c.locations.push_back(lm);
    c.locations.push_back(lr);
    ci.lm_locs.insert(lm);
    ci.lr_locs.insert(lr);

    Transition ti = t; // keeps src, port, guard, func
    ti.dest = lm;
    if (ci.shadow_loc) ti.func.push_back(Assignment{"loc", Expr::literal(Value(t.dest))});
    if (ci.shadow_port) ti.func.push_back(Assignment{"port", Expr::literal(Value(t.port))});
    out.push_back(std::move(ti));
    out.push_back(Transition{lm, ci.pm, expr_true(), {}, lr});
    out.push_back(Transition{lr, ci.pc, expr_true(), {}, t.dest});
    Transition tr{lr, ci.pr, expr_true(), {}, t.src};
    for (const auto& x : detail::recvars(in, t))
      tr.func.push_back(Assignment{x, Expr::variable(ci.tmp_of.at(x))});
    out.push_back(std::move(tr));
  }
  c.transitions = std::move(out);

  if (!ci.monvars.empty()) {
    ci.init0 = detail::fresh_name(c.initial + "0", loc_names, "_");
    c.locations.push_back(ci.init0);
    c.transitions.push_back(Transition{ci.init0, ci.pm, expr_true(), {}, c.initial});
    c.initial = ci.init0;
  }
  return c;
}

/// Backup injection: wherever a recoverable original transition leaves a
/// location, every transition entering that location first saves the
/// variables the recoverable transitions may clobber.
inline void inject_backup(AtomicComponent& c, const AtomicComponent& original,
                          const InstrumentationPlan& plan, const CompInstrumentation& ci) {
  auto rec_it = plan.rectrans.find(original.name);
  if (rec_it == plan.rectrans.end()) return;
  std::map<std::string, std::set<std::string>> backup_at; // location -> vars to save
  for (size_t idx : rec_it->second) {
    const Transition& t = original.transitions[idx];
    for (const auto& x : detail::recvars(original, t)) backup_at[t.src].insert(x);
  }
  for (auto& t : c.transitions) {
    auto it = backup_at.find(t.dest);
    if (it == backup_at.end()) continue;
    for (const auto& x : it->second)
      t.func.push_back(Assignment{ci.tmp_of.at(x), Expr::variable(x)});
  }
}

// ---------------------------------------------------------------------------
// Monitor component
// ---------------------------------------------------------------------------

/// Turn the oracle into a BIP component: a decision location per oracle state
/// plus a primed waiting location it reaches after each observation. Good
/// oracle edges become guarded continue transitions saving the observed
/// values; bad edges become guarded recover transitions restoring them.
inline AtomicComponent generate_monitor_component(const Oracle& o, const System& sys,
                                                  const InstrumentationPlan& plan,
                                                  std::string name = "monitor") {
  std::vector<std::string> failures;
  if (!is_safety(o)) failures.push_back("not a safety property");
  if (!is_stutter_invariant(o)) failures.push_back("not stutter-invariant");
  if (auto k = enforceability_k(o); !k || *k != 1)
    failures.push_back("needs more than one memorization step");
  if (!failures.empty()) {
    std::string msg = "oracle not enforceable by this pipeline:";
    for (const auto& f : failures) msg += " " + f + ";";
    throw TransformError(msg);
  }

  AtomicComponent e;
  std::set<std::string> used;
  for (const auto& c : sys.components) used.insert(c.name);
  for (const auto& c : sys.connectors) used.insert(c.name);
  e.name = detail::fresh_name(std::move(name), used, "_");

  std::map<std::string, Value> init_of; // occur ref -> initial observed value
  for (const auto& r : plan.occur) {
    auto pos = r.rfind('.');
    std::string comp = r.substr(0, pos), item = r.substr(pos + 1);
    const AtomicComponent* c = sys.find_component(comp);
    if (item == "loc") init_of[r] = Value(c->initial);
    else if (item == "port") init_of[r] = Value(kNullPort);
    else init_of[r] = c->initial_valuation().at(item);
  }
  std::vector<std::string> occur(plan.occur.begin(), plan.occur.end());
  for (const auto& r : occur) {
    e.variables.emplace_back(r, init_of[r]);
    e.variables.emplace_back(r + "__tmp", init_of[r]);
  }
  e.ports.push_back(Port{"pm", occur});
  e.ports.push_back(Port{"pc", {}});
  e.ports.push_back(Port{"pr", {}});

  auto reach = detail::reach_from(detail::oracle_adjacency(o), o.initial);
  std::set<std::string> locs;
  for (const auto& s : o.states)
    if (reach.count(s.name)) locs.insert(s.name);
  std::map<std::string, std::string> waiting_of;
  for (const auto& s : o.states) {
    if (!reach.count(s.name)) continue;
    waiting_of[s.name] = detail::fresh_name(s.name + "'", locs, "'");
    locs.insert(waiting_of[s.name]);
  }
  auto waiting = [&](const std::string& q) { return waiting_of.at(q); };
  for (const auto& s : o.states) {
    if (!reach.count(s.name)) continue;
    e.locations.push_back(s.name);
    e.locations.push_back(waiting(s.name));
    e.transitions.push_back(Transition{waiting(s.name), "pm", expr_true(), {}, s.name});
  }
  e.initial = detail::fresh_name("init", locs, "0");
  e.locations.push_back(e.initial);
  e.transitions.push_back(Transition{e.initial, "pm", expr_true(), {}, waiting(o.initial)});

  for (const auto& t : o.transitions) {
    if (!reach.count(t.from)) continue;
    if (good_verdict(transition_verdict(o, t))) {
      Transition tc{t.from, "pc", t.event.expr, {}, waiting(t.to)};
      for (const auto& r : occur) tc.func.push_back(Assignment{r + "__tmp", Expr::variable(r)});
      e.transitions.push_back(std::move(tc));
    } else {
      Transition tr{t.from, "pr", t.event.expr, {}, waiting(t.from)};
      for (const auto& r : occur) tr.func.push_back(Assignment{r, Expr::variable(r + "__tmp")});
      e.transitions.push_back(std::move(tr));
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// Disabler component
// ---------------------------------------------------------------------------

/// Bookkeeping component that remembers which recoverable interaction fired
/// last and keeps a rolled-back interaction disabled until the next continue.
inline AtomicComponent build_disabler(const System& sys, const InstrumentationPlan& plan,
                                      std::map<std::string, std::string>& port_of_conn,
                                      std::string name = "disabler") {
  for (const auto& cn : plan.recinter) {
    const Connector* c = sys.find_connector(cn);
    if (!c->triggers.empty())
      throw TransformError("recoverable connector '" + cn +
                           "' has trigger ports; the disabler needs rendezvous connectors");
  }
  AtomicComponent d;
  std::set<std::string> used;
  for (const auto& c : sys.components) used.insert(c.name);
  for (const auto& c : sys.connectors) used.insert(c.name);
  d.name = detail::fresh_name(std::move(name), used, "_");
  d.locations.push_back("idle");
  d.initial = "idle";
  d.variables.emplace_back("id", Value(int64_t{0}));
  for (size_t i = 0; i < plan.recinter.size(); ++i)
    d.variables.emplace_back("enab_" + std::to_string(i), Value(true));
  for (size_t i = 0; i < plan.recinter.size(); ++i) {
    std::string p = "p_" + plan.recinter[i];
    d.ports.push_back(Port{p, {}});
    port_of_conn[plan.recinter[i]] = p;
    d.transitions.push_back(
        Transition{"idle", p, Expr::variable("enab_" + std::to_string(i)),
                   {Assignment{"id", Expr::literal(Value(int64_t(i)))}}, "idle"});
  }
  d.ports.push_back(Port{"pc", {}});
  d.ports.push_back(Port{"pr", {}});
  Transition cont{"idle", "pc", expr_true(), {}, "idle"};
  Transition recov{"idle", "pr", expr_true(), {}, "idle"};
  for (size_t i = 0; i < plan.recinter.size(); ++i) {
    std::string enab = "enab_" + std::to_string(i);
    cont.func.push_back(Assignment{enab, Expr::literal(Value(true))});
    recov.func.push_back(Assignment{
        enab, Expr::binary(BinOp::And, Expr::variable(enab),
                           Expr::unary(UnOp::Not,
                                       Expr::binary(BinOp::Eq, Expr::variable("id"),
                                                    Expr::literal(Value(int64_t(i))))))});
  }
  d.transitions.push_back(std::move(cont));
  d.transitions.push_back(std::move(recov));
  return d;
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

struct SupervisionInfo {
  std::string monitor;
  std::string disabler; // "" without one
  std::map<std::string, CompInstrumentation> comps;
  std::string gm, gc1, gc2, gr1, gr2; // supervision connector names ("" if omitted)
  std::vector<std::string> recinter;
  bool optimized = true;

  bool is_monitor_port(const std::string& owner) const {
    return owner == monitor || owner == disabler;
  }
};

struct SupervisedSystem {
  System system;
  SupervisionInfo info;
  std::vector<std::string> warnings;
  json provenance;
};

namespace detail {

inline void note(json& prov, const std::string& element, const std::string& stage) {
  prov[element] = stage;
}

} // namespace detail

/// Apply the whole pipeline: plan, instrument, inject backups, synthesize the
/// monitor (and optionally the disabler), and wire the supervision
/// connectors. Monitor-family interactions are raised above every original
/// connector so nothing interleaves between a recoverable step and its
/// continue/recover decision.
inline SupervisedSystem supervise(const System& sys, const Oracle& o, bool with_disabler = false,
                                  bool optimize = true) {
  require_valid(sys);
  SupervisedSystem out;
  out.info.optimized = optimize;
  InstrumentationPlan plan = build_plan(sys, o, optimize);
  out.info.recinter = plan.recinter;
  json& prov = out.provenance;

  std::vector<std::string> original_connectors;
  for (const auto& c : sys.connectors)
    if (!c.export_id) original_connectors.push_back(c.name);

  std::set<std::string> instrumented = plan.reccomp;
  for (const auto& c : plan.use.components())
    instrumented.insert(c); // observed-but-unwritten components still sync

  out.system = sys;
  for (auto& c : out.system.components) {
    if (!instrumented.count(c.name)) continue;
    CompInstrumentation ci;
    AtomicComponent inst = instrument_atomic(c, plan, ci);
    inject_backup(inst, c, plan, ci);
    for (const auto& l : ci.lm_locs)
      detail::note(prov, c.name + "." + l, "transition-instrumentation");
    for (const auto& l : ci.lr_locs)
      detail::note(prov, c.name + "." + l, "transition-instrumentation");
    for (const auto& [x, tmp] : ci.tmp_of)
      detail::note(prov, c.name + "." + tmp, "backup-injection");
    detail::note(prov, c.name + "." + ci.pm, "component-instrumentation");
    detail::note(prov, c.name + "." + ci.pc, "component-instrumentation");
    detail::note(prov, c.name + "." + ci.pr, "component-instrumentation");
    if (!ci.init0.empty()) detail::note(prov, c.name + "." + ci.init0, "initial-synchronization");
    c = std::move(inst);
    out.info.comps[c.name] = std::move(ci);
  }

  AtomicComponent monitor = generate_monitor_component(o, sys, plan);
  out.info.monitor = monitor.name;
  detail::note(prov, monitor.name, "monitor-construction");
  out.system.components.push_back(monitor);

  std::map<std::string, std::string> disabler_port;
  if (with_disabler) {
    AtomicComponent d = build_disabler(sys, plan, disabler_port);
    out.info.disabler = d.name;
    detail::note(prov, d.name, "disabler-construction");
    out.system.components.push_back(std::move(d));
    for (auto& c : out.system.connectors) {
      auto it = disabler_port.find(c.name);
      if (it == disabler_port.end()) continue;
      c.ports.push_back(PortRef{out.info.disabler, it->second});
      detail::note(prov, c.name + "+" + out.info.disabler + "." + it->second,
                   "disabler-integration");
    }
  }

  if (out.info.comps.empty()) {
    out.warnings.push_back("property observes nothing this system can change; "
                           "the monitor is present but never synchronizes");
    return out;
  }

  std::set<std::string> conn_names;
  for (const auto& c : out.system.connectors) conn_names.insert(c.name);
  auto fresh_conn = [&](std::string base) {
    auto n = detail::fresh_name(std::move(base), conn_names, "_");
    conn_names.insert(n);
    return n;
  };

  // observation: every component that finished a recoverable step (or still
  // waits for the initial sync) reports to the monitor together
  Connector gm;
  gm.name = fresh_conn("mon");
  gm.guard = expr_true();
  for (const auto& [comp, ci] : out.info.comps) {
    gm.ports.push_back(PortRef{comp, ci.pm});
    gm.triggers.insert(comp + "." + ci.pm);
    for (const auto& x : ci.monvars) {
      std::string ref = comp + "." + x;
      gm.transfer.push_back(
          Assignment{monitor.name + "." + ref, Expr::variable(ref)});
    }
  }
  gm.ports.push_back(PortRef{monitor.name, "pm"});
  gm.required.push_back(monitor.name + ".pm");
  out.info.gm = gm.name;
  detail::note(prov, gm.name, "integration");

  Connector gc1;
  gc1.name = fresh_conn("contc");
  gc1.guard = expr_true();
  for (const auto& [comp, ci] : out.info.comps) {
    gc1.ports.push_back(PortRef{comp, ci.pc});
    gc1.triggers.insert(comp + "." + ci.pc);
  }
  gc1.export_id = "pc";
  out.info.gc1 = gc1.name;

  Connector gc2;
  gc2.name = fresh_conn("cont");
  gc2.guard = expr_true();
  gc2.ports.push_back(PortRef{gc1.name, "pc"});
  gc2.ports.push_back(PortRef{monitor.name, "pc"});
  if (with_disabler) gc2.ports.push_back(PortRef{out.info.disabler, "pc"});
  out.info.gc2 = gc2.name;
  detail::note(prov, gc2.name, "integration");

  Connector gr1 = gc1, gr2 = gc2;
  gr1.name = fresh_conn("recc");
  gr1.ports.clear();
  gr1.triggers.clear();
  for (const auto& [comp, ci] : out.info.comps) {
    gr1.ports.push_back(PortRef{comp, ci.pr});
    gr1.triggers.insert(comp + "." + ci.pr);
  }
  gr1.export_id = "pr";
  gr2.name = fresh_conn("rec");
  gr2.ports = {PortRef{gr1.name, "pr"}, PortRef{monitor.name, "pr"}};
  if (with_disabler) gr2.ports.push_back(PortRef{out.info.disabler, "pr"});
  out.info.gr1 = gr1.name;
  out.info.gr2 = gr2.name;
  detail::note(prov, gr2.name, "integration");

  out.system.connectors.push_back(std::move(gm));
  out.system.connectors.push_back(std::move(gc1));
  out.system.connectors.push_back(std::move(gc2));
  out.system.connectors.push_back(std::move(gr1));
  out.system.connectors.push_back(std::move(gr2));

  for (const auto& orig : original_connectors)
    for (const auto& hi : {out.info.gm, out.info.gc2, out.info.gr2})
      out.system.priorities.pairs.emplace_back(orig, hi);

  if (plan.recinter.empty())
    out.warnings.push_back("no recoverable interactions; supervision only observes");
  require_valid(out.system);
  return out;
}

// ---------------------------------------------------------------------------
// Supervision info serialization (the provenance sidecar carries both)
// ---------------------------------------------------------------------------

inline json supervision_info_to_json(const SupervisionInfo& info) {
  json j;
  j["monitor"] = info.monitor;
  j["disabler"] = info.disabler;
  j["gm"] = info.gm;
  j["gc1"] = info.gc1;
  j["gc2"] = info.gc2;
  j["gr1"] = info.gr1;
  j["gr2"] = info.gr2;
  j["recinter"] = info.recinter;
  j["optimized"] = info.optimized;
  j["components"] = json::object();
  for (const auto& [name, ci] : info.comps) {
    json c;
    c["pm"] = ci.pm;
    c["pc"] = ci.pc;
    c["pr"] = ci.pr;
    c["init0"] = ci.init0;
    c["shadow_loc"] = ci.shadow_loc;
    c["shadow_port"] = ci.shadow_port;
    c["tmp_of"] = ci.tmp_of;
    c["lm"] = ci.lm_locs;
    c["lr"] = ci.lr_locs;
    c["monvars"] = ci.monvars;
    j["components"][name] = std::move(c);
  }
  return j;
}

inline SupervisionInfo supervision_info_from_json(const json& j) {
  SupervisionInfo info;
  info.monitor = j.at("monitor").get<std::string>();
  info.disabler = j.at("disabler").get<std::string>();
  info.gm = j.at("gm").get<std::string>();
  info.gc1 = j.at("gc1").get<std::string>();
  info.gc2 = j.at("gc2").get<std::string>();
  info.gr1 = j.at("gr1").get<std::string>();
  info.gr2 = j.at("gr2").get<std::string>();
  info.recinter = j.at("recinter").get<std::vector<std::string>>();
  info.optimized = j.at("optimized").get<bool>();
  for (const auto& [name, c] : j.at("components").items()) {
    CompInstrumentation ci;
    ci.pm = c.at("pm").get<std::string>();
    ci.pc = c.at("pc").get<std::string>();
    ci.pr = c.at("pr").get<std::string>();
    ci.init0 = c.at("init0").get<std::string>();
    ci.shadow_loc = c.at("shadow_loc").get<bool>();
    ci.shadow_port = c.at("shadow_port").get<bool>();
    ci.tmp_of = c.at("tmp_of").get<std::map<std::string, std::string>>();
    for (const auto& l : c.at("lm")) ci.lm_locs.insert(l.get<std::string>());
    for (const auto& l : c.at("lr")) ci.lr_locs.insert(l.get<std::string>());
    ci.monvars = c.at("monvars").get<std::vector<std::string>>();
    info.comps[name] = std::move(ci);
  }
  return info;
}

// ---------------------------------------------------------------------------
// Stability and run projection
// ---------------------------------------------------------------------------

inline bool interaction_touches(const Interaction& a, const std::string& comp) {
  for (const auto& p : a.ports)
    if (parse_port_ref(p).owner == comp) return true;
  return false;
}

/// Stable: no enabled interaction involves the monitor.
inline bool is_stable(const System& sup, const SupervisionInfo& info, const GlobalConfig& g) {
  for (const auto& a : enabled_interactions(sup, g))
    if (interaction_touches(a, info.monitor)) return false;
  return true;
}

namespace detail {

/// Strip supervision artifacts from one supervised configuration, yielding
/// the matching configuration of the original system (without last_port,
/// which the projection tracks separately).
inline GlobalConfig erase_config(const System& orig, const System& sup,
                                 const SupervisionInfo& info, const GlobalConfig& g) {
  GlobalConfig out;
  for (const auto& oc : orig.components) {
    int si = sup.component_index(oc.name);
    const LocalConfig& lc = g.locals[si];
    LocalConfig plain;
    plain.loc = lc.loc;
    auto it = info.comps.find(oc.name);
    if (it != info.comps.end()) {
      const CompInstrumentation& ci = it->second;
      if (plain.loc == ci.init0) plain.loc = oc.initial;
      if (ci.lm_locs.count(plain.loc) || ci.lr_locs.count(plain.loc))
        throw TransformError("projection hit intermediate location '" + plain.loc +
                             "' of component '" + oc.name + "'");
      std::set<std::string> drop;
      if (ci.shadow_loc) drop.insert("loc");
      if (ci.shadow_port) drop.insert("port");
      for (const auto& [x, tmp] : ci.tmp_of) drop.insert(tmp);
      for (const auto& [n, v] : lc.vals)
        if (!drop.count(n)) plain.vals[n] = v;
    } else {
      plain.vals = lc.vals;
    }
    out.locals.push_back(std::move(plain));
  }
  return out;
}

inline bool same_ignoring_ports(const GlobalConfig& a, const GlobalConfig& b) {
  if (a.locals.size() != b.locals.size()) return false;
  for (size_t i = 0; i < a.locals.size(); ++i)
    if (a.locals[i].loc != b.locals[i].loc || a.locals[i].vals != b.locals[i].vals) return false;
  return true;
}

} // namespace detail

/// Project a supervised run back onto the original system: the initial
/// synchronization disappears, each recoverable step fuses with its
/// continue into one original step, a recover block vanishes entirely, and
/// untouched steps pass through with supervision ports stripped.
inline Run project_run(const System& orig, const System& sup, const SupervisionInfo& info,
                       const Run& r) {
  auto contains_port = [&](const Interaction& a, const std::string& comp, const std::string& p) {
    return a.contains(comp + "." + p);
  };
  auto is_gm = [&](const Interaction& a) { return contains_port(a, info.monitor, "pm"); };
  auto is_gc = [&](const Interaction& a) { return contains_port(a, info.monitor, "pc"); };
  auto is_gr = [&](const Interaction& a) { return contains_port(a, info.monitor, "pr"); };
  auto enters_lm = [&](const GlobalConfig& g) {
    for (const auto& [comp, ci] : info.comps) {
      int si = sup.component_index(comp);
      if (ci.lm_locs.count(g.locals[si].loc)) return true;
    }
    return false;
  };
  auto strip = [&](const Interaction& a) {
    Interaction p;
    p.connector = a.connector;
    for (const auto& pr : a.ports)
      if (!info.is_monitor_port(parse_port_ref(pr).owner)) p.ports.push_back(pr);
    return p;
  };

  Run out;
  std::vector<std::optional<std::string>> last_port(orig.components.size());
  auto snapshot = [&](const GlobalConfig& g) {
    GlobalConfig c = detail::erase_config(orig, sup, info, g);
    for (size_t i = 0; i < c.locals.size(); ++i) c.locals[i].last_port = last_port[i];
    return c;
  };
  auto emit = [&](const Interaction& projected, const GlobalConfig& sup_config) {
    for (const auto& pr : projected.ports) {
      auto ref = parse_port_ref(pr);
      last_port[orig.component_index(ref.owner)] = ref.port;
    }
    out.steps.push_back(projected);
    out.configs.push_back(snapshot(sup_config));
  };

  out.configs.push_back(snapshot(r.configs.front()));
  size_t i = 0;
  while (i < r.steps.size()) {
    const Interaction& a = r.steps[i];
    if (is_gm(a)) {
      // only the initial synchronization may appear outside a block
      if (!detail::same_ignoring_ports(snapshot(r.configs[i + 1]), out.configs.back()))
        throw TransformError("unexpected monitor step at position " + std::to_string(i));
      ++i;
      continue;
    }
    if (is_gc(a) || is_gr(a))
      throw TransformError("monitor decision without observation at position " +
                           std::to_string(i));
    if (enters_lm(r.configs[i + 1])) {
      if (i + 2 >= r.steps.size())
        throw TransformError("run ends inside a recoverable block at position " +
                             std::to_string(i));
      if (!is_gm(r.steps[i + 1]))
        throw TransformError("recoverable step not followed by an observation at position " +
                             std::to_string(i));
      const Interaction& decision = r.steps[i + 2];
      if (is_gc(decision)) {
        emit(strip(a), r.configs[i + 3]);
      } else if (is_gr(decision)) {
        if (!detail::same_ignoring_ports(snapshot(r.configs[i + 3]), out.configs.back()))
          throw TransformError("recovery did not restore the prior configuration at position " +
                               std::to_string(i));
      } else {
        throw TransformError("observation not followed by a decision at position " +
                             std::to_string(i));
      }
      i += 3;
      continue;
    }
    emit(strip(a), r.configs[i + 1]);
    ++i;
  }
  return out;
}

} // namespace rebip

#endif
