#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace coha {

enum class ElementKind { controller, actuated_component, process, sensor };

enum class TemplateKind { provides, while_providing, when_stops, measures, feeds_back };

struct Element {
  std::string id;
  std::string name;
  ElementKind kind = ElementKind::process;
  // Overrides the naive a/an choice when the element is listed first.
  std::optional<std::string> article;

  bool operator==(const Element&) const = default;
};

struct ControlAction {
  std::string id;
  std::string issuer;
  std::string receiver;
  std::string signal_noun_phrase;
  bool continuous = true;

  bool operator==(const ControlAction&) const = default;
};

// Slot fragments for the relationship sentence frames. Authors write them so
// the frame reads correctly; nothing is inflected.
struct ClauseText {
  std::string clause;
  std::string purpose;
  std::string consequence;

  bool operator==(const ClauseText&) const = default;
};

struct Relationship {
  std::string id;
  TemplateKind template_kind = TemplateKind::provides;
  std::string subject;
  std::optional<std::string> object;
  ClauseText clause_text;

  bool operator==(const Relationship&) const = default;
};

struct Assumption {
  std::string id;
  std::string sentence;

  bool operator==(const Assumption&) const = default;
};

struct DangerousEvent {
  std::string id;
  std::string definition_sentence;
  std::string outcome_clause;

  bool operator==(const DangerousEvent&) const = default;
};

struct SystemModel {
  std::string name;
  std::string complexity_label;
  std::vector<Element> elements;
  std::vector<ControlAction> control_actions;
  std::vector<Relationship> relationships;
  std::vector<Assumption> assumptions;
  std::vector<DangerousEvent> dangerous_events;
  bool closed_world = true;

  bool operator==(const SystemModel&) const = default;

  const Element* find_element(std::string_view id) const;
  const ControlAction* find_action(std::string_view id) const;
  const DangerousEvent* find_event(std::string_view id) const;
};

struct Violation {
  std::string rule;
  std::string id;
  std::string message;

  bool operator==(const Violation&) const = default;
};

inline constexpr std::string_view kDefinitionPrefix = "A dangerous event occurs if";

std::string_view to_string(ElementKind kind);
std::string_view to_string(TemplateKind kind);
ElementKind element_kind_from_string(std::string_view text);
TemplateKind template_kind_from_string(std::string_view text);

// Checks every model invariant. Violations are data; this never throws.
std::vector<Violation> validate(const SystemModel& model);

// Parses a model document and enforces validate(); throws coha::Error
// (malformed_document or invalid_model) listing offending ids in details().
SystemModel parse_model(std::string_view doc);
SystemModel load_model_file(const std::string& path);

nlohmann::json to_json(const SystemModel& model);
std::string serialize_model(const SystemModel& model);

}  // namespace coha
