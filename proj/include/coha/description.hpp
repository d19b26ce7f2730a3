#pragma once

#include <string>

#include "coha/model.hpp"

namespace coha {

inline constexpr const char* kClosedWorldSentence = "There are no more dangerous events.";

// The four-part system description sent to the LLM before any query.
//
//   part 1  elements, as one in-sentence list
//   part 2  one sentence per relationship, via the fixed sentence frames
//   part 3  assumptions and constraints (may be empty)
//   part 4  dangerous-event definitions, plus the closed-world sentence
//
// full_text joins the non-empty parts with one blank line.
struct DescriptionText {
  std::string part1_elements;
  std::string part2_relationships;
  std::string part3_assumptions;
  std::string part4_hazards;
  std::string full_text;

  const std::string& part(int index) const;
  bool operator==(const DescriptionText&) const = default;
};

// "a" or "an" for a name, by its first letter.
std::string indefinite_article(const std::string& name);

std::string render_relationship(const SystemModel& model, const Relationship& rel);

// Throws coha::Error(invalid_model) when the model does not validate.
DescriptionText render_description(const SystemModel& model);

}  // namespace coha
