#include "coha/model.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "coha/error.hpp"

namespace coha {

using nlohmann::json;

namespace {

template <typename T>
const T* find_by_id(const std::vector<T>& items, std::string_view id) {
  for (const auto& item : items) {
    if (item.id == id) return &item;
  }
  return nullptr;
}

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::malformed_document, "malformed model document: " + what);
}

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                         const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) malformed("unknown field '" + key + "' in " + where);
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) malformed("missing field '" + std::string(key) + "' in " + where);
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) malformed("field '" + std::string(key) + "' in " + where + " must be a string");
  return v.get<std::string>();
}

std::string optional_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) malformed("field '" + std::string(key) + "' in " + where + " must be a string");
  return it->get<std::string>();
}

const json& array_field(const json& doc, const char* key) {
  static const json empty = json::array();
  auto it = doc.find(key);
  if (it == doc.end()) return empty;
  if (!it->is_array()) malformed("'" + std::string(key) + "' must be an array");
  return *it;
}

std::string where(const char* section, std::size_t index) {
  return std::string(section) + "[" + std::to_string(index) + "]";
}

Element parse_element(const json& j, const std::string& w) {
  if (!j.is_object()) malformed(w + " must be an object");
  reject_unknown_keys(j, {"id", "name", "kind", "article"}, w);
  Element e;
  e.id = require_string(j, "id", w);
  e.name = require_string(j, "name", w);
  try {
    e.kind = element_kind_from_string(require_string(j, "kind", w));
  } catch (const Error& err) {
    malformed(std::string(err.what()) + " in " + w);
  }
  if (j.contains("article") && !j["article"].is_null()) e.article = require_string(j, "article", w);
  return e;
}

ControlAction parse_action(const json& j, const std::string& w) {
  if (!j.is_object()) malformed(w + " must be an object");
  reject_unknown_keys(j, {"id", "issuer", "receiver", "signal_noun_phrase", "continuous"}, w);
  ControlAction a;
  a.id = require_string(j, "id", w);
  a.issuer = require_string(j, "issuer", w);
  a.receiver = require_string(j, "receiver", w);
  a.signal_noun_phrase = require_string(j, "signal_noun_phrase", w);
  if (auto it = j.find("continuous"); it != j.end()) {
    if (!it->is_boolean()) malformed("field 'continuous' in " + w + " must be a boolean");
    a.continuous = it->get<bool>();
  }
  return a;
}

Relationship parse_relationship(const json& j, const std::string& w) {
  if (!j.is_object()) malformed(w + " must be an object");
  reject_unknown_keys(j, {"id", "template_kind", "subject", "object", "clause_text"}, w);
  Relationship r;
  r.id = require_string(j, "id", w);
  try {
    r.template_kind = template_kind_from_string(require_string(j, "template_kind", w));
  } catch (const Error& err) {
    malformed(std::string(err.what()) + " in " + w);
  }
  r.subject = require_string(j, "subject", w);
  if (auto obj = optional_string(j, "object", w); !obj.empty()) r.object = obj;

  const json& clause = require(j, "clause_text", w);
  if (clause.is_string()) {
    r.clause_text.clause = clause.get<std::string>();
  } else if (clause.is_object()) {
    const std::string cw = w + ".clause_text";
    reject_unknown_keys(clause, {"clause", "purpose", "consequence"}, cw);
    r.clause_text.clause = require_string(clause, "clause", cw);
    r.clause_text.purpose = optional_string(clause, "purpose", cw);
    r.clause_text.consequence = optional_string(clause, "consequence", cw);
  } else {
    malformed("'clause_text' in " + w + " must be a string or an object");
  }
  return r;
}

Assumption parse_assumption(const json& j, const std::string& w) {
  if (!j.is_object()) malformed(w + " must be an object");
  reject_unknown_keys(j, {"id", "sentence"}, w);
  return {require_string(j, "id", w), require_string(j, "sentence", w)};
}

DangerousEvent parse_event(const json& j, const std::string& w) {
  if (!j.is_object()) malformed(w + " must be an object");
  reject_unknown_keys(j, {"id", "definition_sentence", "outcome_clause"}, w);
  return {require_string(j, "id", w), require_string(j, "definition_sentence", w),
          require_string(j, "outcome_clause", w)};
}

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace

std::string_view to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::controller: return "controller";
    case ElementKind::actuated_component: return "actuated-component";
    case ElementKind::process: return "process";
    case ElementKind::sensor: return "sensor";
  }
  return "process";
}

std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::provides: return "provides";
    case TemplateKind::while_providing: return "while-providing";
    case TemplateKind::when_stops: return "when-stops";
    case TemplateKind::measures: return "measures";
    case TemplateKind::feeds_back: return "feeds-back";
  }
  return "provides";
}

ElementKind element_kind_from_string(std::string_view text) {
  for (auto k : {ElementKind::controller, ElementKind::actuated_component, ElementKind::process,
                 ElementKind::sensor}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::invalid_argument, "unknown element kind '" + std::string(text) + "'");
}

TemplateKind template_kind_from_string(std::string_view text) {
  for (auto k : {TemplateKind::provides, TemplateKind::while_providing, TemplateKind::when_stops,
                 TemplateKind::measures, TemplateKind::feeds_back}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::invalid_argument, "unknown template kind '" + std::string(text) + "'");
}

const Element* SystemModel::find_element(std::string_view id) const {
  return find_by_id(elements, id);
}
const ControlAction* SystemModel::find_action(std::string_view id) const {
  return find_by_id(control_actions, id);
}
const DangerousEvent* SystemModel::find_event(std::string_view id) const {
  return find_by_id(dangerous_events, id);
}

std::vector<Violation> validate(const SystemModel& model) {
  std::vector<Violation> out;
  auto flag = [&](std::string rule, std::string id, std::string message) {
    out.push_back({std::move(rule), std::move(id), std::move(message)});
  };

  if (model.elements.empty()) flag("no-elements", "", "no elements");
  if (model.control_actions.empty()) flag("no-control-actions", "", "no control actions");
  if (model.dangerous_events.empty()) flag("no-dangerous-events", "", "no dangerous events");

  bool has_controller = false;
  for (const auto& e : model.elements) has_controller |= e.kind == ElementKind::controller;
  if (!model.elements.empty() && !has_controller) flag("no-controller", "", "no controller element");

  std::set<std::string> seen;
  auto check_id = [&](const std::string& id, const char* what) {
    if (id.empty()) {
      flag("empty-id", "", std::string("a ") + what + " has an empty id");
    } else if (!seen.insert(id).second) {
      flag("duplicate-id", id, "duplicate id '" + id + "'");
    }
  };
  for (const auto& e : model.elements) check_id(e.id, "element");
  for (const auto& a : model.control_actions) check_id(a.id, "control action");
  for (const auto& r : model.relationships) check_id(r.id, "relationship");
  for (const auto& a : model.assumptions) check_id(a.id, "assumption");
  for (const auto& d : model.dangerous_events) check_id(d.id, "dangerous event");

  auto check_ref = [&](const std::string& owner, const std::string& ref) -> const Element* {
    const Element* e = model.find_element(ref);
    if (e == nullptr) {
      flag("dangling-reference", ref, "'" + owner + "' references unknown element '" + ref + "'");
    }
    return e;
  };

  for (const auto& e : model.elements) {
    if (is_blank(e.name)) flag("empty-name", e.id, "element '" + e.id + "' has an empty name");
  }

  for (const auto& a : model.control_actions) {
    const Element* issuer = check_ref(a.id, a.issuer);
    check_ref(a.id, a.receiver);
    if (issuer != nullptr && issuer->kind != ElementKind::controller) {
      flag("issuer-not-controller", a.id,
           "control action '" + a.id + "' is issued by non-controller '" + a.issuer + "'");
    }
    if (is_blank(a.signal_noun_phrase)) {
      flag("empty-signal", a.id, "control action '" + a.id + "' has an empty signal noun phrase");
    }
  }

  for (const auto& r : model.relationships) {
    check_ref(r.id, r.subject);
    if (r.object) check_ref(r.id, *r.object);
    const bool needs_object =
        r.template_kind == TemplateKind::provides || r.template_kind == TemplateKind::feeds_back;
    if (needs_object && !r.object) {
      flag("missing-object", r.id, "relationship '" + r.id + "' needs an object element");
    }
    if (is_blank(r.clause_text.clause)) {
      flag("empty-clause", r.id, "relationship '" + r.id + "' has an empty clause");
    }
    const bool needs_consequence = r.template_kind == TemplateKind::while_providing ||
                                   r.template_kind == TemplateKind::when_stops;
    if (needs_consequence && is_blank(r.clause_text.consequence)) {
      flag("missing-consequence", r.id, "relationship '" + r.id + "' needs a consequence clause");
    }
  }

  for (const auto& a : model.assumptions) {
    if (is_blank(a.sentence) || a.sentence.back() != '.') {
      flag("assumption-format", a.id,
           "assumption '" + a.id + "' must be a non-empty sentence ending with a period");
    }
  }

  for (const auto& d : model.dangerous_events) {
    if (!d.definition_sentence.starts_with(kDefinitionPrefix)) {
      flag("event-definition-format", d.id,
           "dangerous event '" + d.id + "' definition must begin \"" +
               std::string(kDefinitionPrefix) + "\"");
    }
    if (is_blank(d.outcome_clause)) {
      flag("empty-outcome", d.id, "dangerous event '" + d.id + "' has an empty outcome clause");
    }
  }
  return out;
}

SystemModel parse_model(std::string_view doc) {
  json root;
  try {
    root = json::parse(doc);
  } catch (const json::parse_error& e) {
    malformed(e.what());
  }
  if (!root.is_object()) malformed("top level must be an object");
  reject_unknown_keys(root,
                      {"name", "complexity_label", "elements", "control_actions", "relationships",
                       "assumptions", "dangerous_events", "closed_world"},
                      "model");

  SystemModel model;
  model.name = optional_string(root, "name", "model");
  model.complexity_label = optional_string(root, "complexity_label", "model");
  if (auto it = root.find("closed_world"); it != root.end()) {
    if (!it->is_boolean()) malformed("'closed_world' must be a boolean");
    model.closed_world = it->get<bool>();
  }

  const json& elements = array_field(root, "elements");
  for (std::size_t i = 0; i < elements.size(); ++i)
    model.elements.push_back(parse_element(elements[i], where("elements", i)));
  const json& actions = array_field(root, "control_actions");
  for (std::size_t i = 0; i < actions.size(); ++i)
    model.control_actions.push_back(parse_action(actions[i], where("control_actions", i)));
  const json& rels = array_field(root, "relationships");
  for (std::size_t i = 0; i < rels.size(); ++i)
    model.relationships.push_back(parse_relationship(rels[i], where("relationships", i)));
  const json& assumptions = array_field(root, "assumptions");
  for (std::size_t i = 0; i < assumptions.size(); ++i)
    model.assumptions.push_back(parse_assumption(assumptions[i], where("assumptions", i)));
  const json& events = array_field(root, "dangerous_events");
  for (std::size_t i = 0; i < events.size(); ++i)
    model.dangerous_events.push_back(parse_event(events[i], where("dangerous_events", i)));

  auto violations = validate(model);
  if (!violations.empty()) {
    std::string message = "invalid model:";
    std::vector<std::string> details;
    for (const auto& v : violations) {
      message += " " + v.message + ";";
      details.push_back(v.rule + (v.id.empty() ? "" : ":" + v.id));
    }
    message.pop_back();
    throw Error(ErrorCode::invalid_model, message, std::move(details));
  }
  return model;
}

SystemModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

json to_json(const SystemModel& model) {
  json j;
  j["name"] = model.name;
  j["complexity_label"] = model.complexity_label;
  j["elements"] = json::array();
  for (const auto& e : model.elements) {
    json je = {{"id", e.id}, {"name", e.name}, {"kind", to_string(e.kind)}};
    if (e.article) je["article"] = *e.article;
    j["elements"].push_back(std::move(je));
  }
  j["control_actions"] = json::array();
  for (const auto& a : model.control_actions) {
    j["control_actions"].push_back({{"id", a.id},
                                    {"issuer", a.issuer},
                                    {"receiver", a.receiver},
                                    {"signal_noun_phrase", a.signal_noun_phrase},
                                    {"continuous", a.continuous}});
  }
  j["relationships"] = json::array();
  for (const auto& r : model.relationships) {
    json clause = {{"clause", r.clause_text.clause}};
    if (!r.clause_text.purpose.empty()) clause["purpose"] = r.clause_text.purpose;
    if (!r.clause_text.consequence.empty()) clause["consequence"] = r.clause_text.consequence;
    json jr = {{"id", r.id},
               {"template_kind", to_string(r.template_kind)},
               {"subject", r.subject},
               {"clause_text", std::move(clause)}};
    if (r.object) jr["object"] = *r.object;
    j["relationships"].push_back(std::move(jr));
  }
  j["assumptions"] = json::array();
  for (const auto& a : model.assumptions) {
    j["assumptions"].push_back({{"id", a.id}, {"sentence", a.sentence}});
  }
  j["dangerous_events"] = json::array();
  for (const auto& d : model.dangerous_events) {
    j["dangerous_events"].push_back({{"id", d.id},
                                     {"definition_sentence", d.definition_sentence},
                                     {"outcome_clause", d.outcome_clause}});
  }
  j["closed_world"] = model.closed_world;
  return j;
}

std::string serialize_model(const SystemModel& model) { return to_json(model).dump(2) + "\n"; }

}  // namespace coha
