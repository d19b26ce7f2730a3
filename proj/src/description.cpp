#include "coha/description.hpp"

#include <cctype>

#include "coha/error.hpp"

namespace coha {

namespace {

void require_valid(const SystemModel& model) {
  auto violations = validate(model);
  if (violations.empty()) return;
  std::vector<std::string> details;
  for (const auto& v : violations) details.push_back(v.rule + (v.id.empty() ? "" : ":" + v.id));
  throw Error(ErrorCode::invalid_model, "cannot describe an invalid model: " + violations[0].message,
              std::move(details));
}

std::string join_sentences(const std::vector<std::string>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (s.empty()) continue;
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

std::string element_list(const SystemModel& model) {
  const auto& els = model.elements;
  const Element& first = els.front();
  std::string article = first.article ? *first.article : indefinite_article(first.name);

  std::string out = "Consider a system consisting of ";
  if (!article.empty()) out += article + " ";
  for (std::size_t i = 0; i < els.size(); ++i) {
    if (i > 0) {
      if (els.size() == 2) {
        out += " and ";
      } else {
        out += ", ";
        if (i + 1 == els.size()) out += "and ";
      }
    }
    out += els[i].name;
  }
  out += ".";
  return out;
}

}  // namespace

const std::string& DescriptionText::part(int index) const {
  switch (index) {
    case 1: return part1_elements;
    case 2: return part2_relationships;
    case 3: return part3_assumptions;
    case 4: return part4_hazards;
    default:
      throw Error(ErrorCode::invalid_argument,
                  "description part must be 1-4, got " + std::to_string(index));
  }
}

std::string indefinite_article(const std::string& name) {
  if (name.empty()) return "a";
  switch (std::tolower(static_cast<unsigned char>(name.front()))) {
    case 'a': case 'e': case 'i': case 'o': case 'u': return "an";
    default: return "a";
  }
}

std::string render_relationship(const SystemModel& model, const Relationship& rel) {
  auto name_of = [&](const std::string& id) {
    const Element* e = model.find_element(id);
    if (e == nullptr) throw Error(ErrorCode::unknown_id, "unknown element '" + id + "'", {id});
    return e->name;
  };
  const ClauseText& ct = rel.clause_text;
  const std::string subject = name_of(rel.subject);
  const std::string to_object = rel.object ? " to the " + name_of(*rel.object) : "";
  const std::string purpose = ct.purpose.empty() ? "" : " " + ct.purpose;

  switch (rel.template_kind) {
    case TemplateKind::provides:
    case TemplateKind::feeds_back:
      return "The " + subject + " provides " + ct.clause + to_object + purpose + ".";
    case TemplateKind::while_providing:
      return "While the " + subject + " is providing " + ct.clause + to_object + ", " +
             ct.consequence + ".";
    case TemplateKind::when_stops:
      return "When the " + subject + " stops providing " + ct.clause + to_object + ", " +
             ct.consequence + ".";
    case TemplateKind::measures:
      return "The " + subject + " measures " + ct.clause + purpose + ".";
  }
  return {};
}

DescriptionText render_description(const SystemModel& model) {
  require_valid(model);
  DescriptionText d;
  d.part1_elements = element_list(model);

  std::vector<std::string> sentences;
  for (const auto& rel : model.relationships) sentences.push_back(render_relationship(model, rel));
  d.part2_relationships = join_sentences(sentences);

  sentences.clear();
  for (const auto& a : model.assumptions) sentences.push_back(a.sentence);
  d.part3_assumptions = join_sentences(sentences);

  sentences.clear();
  for (const auto& e : model.dangerous_events) sentences.push_back(e.definition_sentence);
  if (model.closed_world) sentences.emplace_back(kClosedWorldSentence);
  d.part4_hazards = join_sentences(sentences);

  for (const std::string* p :
       {&d.part1_elements, &d.part2_relationships, &d.part3_assumptions, &d.part4_hazards}) {
    if (p->empty()) continue;
    if (!d.full_text.empty()) d.full_text += "\n\n";
    d.full_text += *p;
  }
  return d;
}

}  // namespace coha
