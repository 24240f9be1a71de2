#ifndef REBIP_PARSE_HPP
#define REBIP_PARSE_HPP

#include "rebip/model.hpp"

#include <json.hpp>

#include <fstream>
#include <string>

namespace rebip {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Values and expressions
// ---------------------------------------------------------------------------

inline Value value_from_json(const json& j) {
  if (j.is_boolean()) return Value(j.get<bool>());
  if (j.is_number_integer()) return Value(j.get<int64_t>());
  if (j.is_string()) return Value(j.get<std::string>());
  throw ParseError("unsupported value literal: " + j.dump());
}

inline json value_to_json(const Value& v) {
  if (v.is_int()) return v.as_int();
  if (v.is_bool()) return v.as_bool();
  return v.as_str();
}

inline ExprPtr guard_from_json(const json& j) {
  if (j.is_null()) return expr_true();
  if (j.is_boolean()) return Expr::literal(Value(j.get<bool>()));
  return parse_expr(j.get<std::string>());
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

inline AtomicComponent component_from_json(const json& j) {
  AtomicComponent c;
  c.name = j.at("name").get<std::string>();
  for (const auto& v : j.value("variables", json::array()))
    c.variables.emplace_back(v.at("name").get<std::string>(), value_from_json(v.at("init")));
  for (const auto& p : j.value("ports", json::array())) {
    Port port;
    port.name = p.at("name").get<std::string>();
    for (const auto& x : p.value("vars", json::array()))
      port.vars.push_back(x.get<std::string>());
    c.ports.push_back(std::move(port));
  }
  for (const auto& l : j.at("locations")) c.locations.push_back(l.get<std::string>());
  c.initial = j.at("initial").get<std::string>();
  for (const auto& t : j.value("transitions", json::array())) {
    Transition tr;
    tr.src = t.at("from").get<std::string>();
    tr.port = t.at("port").get<std::string>();
    tr.guard = t.contains("guard") ? guard_from_json(t.at("guard")) : expr_true();
    for (const auto& a : t.value("do", json::array()))
      tr.func.push_back(parse_assignment(a.get<std::string>()));
    tr.dest = t.at("to").get<std::string>();
    c.transitions.push_back(std::move(tr));
  }
  return c;
}

inline json component_to_json(const AtomicComponent& c) {
  json j;
  j["name"] = c.name;
  j["variables"] = json::array();
  for (const auto& [n, v] : c.variables)
    j["variables"].push_back({{"name", n}, {"init", value_to_json(v)}});
  j["ports"] = json::array();
  for (const auto& p : c.ports) j["ports"].push_back({{"name", p.name}, {"vars", p.vars}});
  j["locations"] = c.locations;
  j["initial"] = c.initial;
  j["transitions"] = json::array();
  for (const auto& t : c.transitions) {
    json jt{{"from", t.src}, {"port", t.port}, {"to", t.dest}};
    if (!is_literal_true(t.guard)) jt["guard"] = expr_to_string(t.guard);
    if (!t.func.empty()) {
      jt["do"] = json::array();
      for (const auto& a : t.func) jt["do"].push_back(assignment_to_string(a));
    }
    j["transitions"].push_back(std::move(jt));
  }
  return j;
}

inline Connector connector_from_json(const json& j) {
  Connector c;
  c.name = j.at("name").get<std::string>();
  for (const auto& p : j.at("ports")) c.ports.push_back(parse_port_ref(p.get<std::string>()));
  for (const auto& t : j.value("triggers", json::array())) c.triggers.insert(t.get<std::string>());
  c.guard = j.contains("guard") ? guard_from_json(j.at("guard")) : expr_true();
  for (const auto& a : j.value("transfer", json::array()))
    c.transfer.push_back(parse_assignment(a.get<std::string>()));
  if (j.contains("export")) c.export_id = j.at("export").get<std::string>();
  for (const auto& r : j.value("require", json::array())) c.required.push_back(r.get<std::string>());
  return c;
}

inline json connector_to_json(const Connector& c) {
  json j{{"name", c.name}};
  j["ports"] = json::array();
  for (const auto& p : c.ports) j["ports"].push_back(p.str());
  if (!c.triggers.empty()) j["triggers"] = c.triggers;
  if (!is_literal_true(c.guard)) j["guard"] = expr_to_string(c.guard);
  if (!c.transfer.empty()) {
    j["transfer"] = json::array();
    for (const auto& a : c.transfer) j["transfer"].push_back(assignment_to_string(a));
  }
  if (c.export_id) j["export"] = *c.export_id;
  if (!c.required.empty()) j["require"] = c.required;
  return j;
}

inline System system_from_json(const json& j) {
  System sys;
  for (const auto& c : j.value("components", json::array()))
    sys.components.push_back(component_from_json(c));
  for (const auto& c : j.value("connectors", json::array()))
    sys.connectors.push_back(connector_from_json(c));
  for (const auto& p : j.value("priorities", json::array())) {
    if (!p.is_array() || p.size() != 2)
      throw ParseError("priority entry must be a [low, high] pair");
    sys.priorities.pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
  }
  return sys;
}

inline json system_to_json(const System& sys) {
  json j;
  j["components"] = json::array();
  for (const auto& c : sys.components) j["components"].push_back(component_to_json(c));
  j["connectors"] = json::array();
  for (const auto& c : sys.connectors) j["connectors"].push_back(connector_to_json(c));
  j["priorities"] = json::array();
  for (const auto& [lo, hi] : sys.priorities.pairs)
    j["priorities"].push_back(json::array({lo, hi}));
  return j;
}

inline System load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("malformed JSON in '" + path + "': " + e.what());
  }
  try {
    return system_from_json(j);
  } catch (const json::exception& e) {
    throw ParseError("bad model structure in '" + path + "': " + e.what());
  }
}

inline void save_system(const System& sys, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write model file '" + path + "'");
  out << system_to_json(sys).dump(2) << "\n";
}

} // namespace rebip

#endif
