#include <doctest.h>

#include "coha/description.hpp"
#include "support.hpp"

using namespace coha;

namespace {

std::size_t count_sentences(const std::string& text) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '.' && (i + 1 == text.size() || text[i + 1] == ' ')) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("lowest fixture part 1 golden") {
  const auto d = render_description(coha_test::load_fixture_model("low"));
  CHECK(d.part1_elements == "Consider a system consisting of a Controller, Heater, Water Tank, and Thermometer.");
}

TEST_CASE("lowest fixture part 2") {
  const auto d = render_description(coha_test::load_fixture_model("low"));
  CHECK(d.part2_relationships.find("The Thermometer measures the current water temperature inside the Water Tank.") !=
        std::string::npos);
  CHECK(d.part2_relationships ==
        "The Controller provides the enable signal to the Heater to maintain a temperature setpoint. "
        "While the Controller is providing the enable signal to the Heater, the Heater heats the water in the "
        "Water Tank. When the Controller stops providing the enable signal to the Heater, the Heater does not "
        "heat the water in the Water Tank. The Thermometer measures the current water temperature inside the "
        "Water Tank. The Thermometer provides the current temperature of the water flowing out of the Water "
        "Tank to the Controller.");
}

TEST_CASE("part 4 and the closed-world sentence") {
  SystemModel m = coha_test::load_fixture_model("low");
  auto d = render_description(m);
  CHECK(d.full_text.ends_with("There are no more dangerous events."));

  m.closed_world = false;
  d = render_description(m);
  CHECK(d.part4_hazards == m.dangerous_events[0].definition_sentence);
}

TEST_CASE("no assumptions gives an empty part 3") {
  SystemModel m = coha_test::load_fixture_model("low");
  m.assumptions.clear();
  const auto d = render_description(m);
  CHECK(d.part3_assumptions.empty());
  CHECK(d.full_text == d.part1_elements + "\n\n" + d.part2_relationships + "\n\n" + d.part4_hazards);
}

TEST_CASE("full text joins the parts with one blank line") {
  const auto d = render_description(coha_test::load_fixture_model("low"));
  CHECK(d.full_text == d.part1_elements + "\n\n" + d.part2_relationships + "\n\n" + d.part3_assumptions +
                           "\n\n" + d.part4_hazards);
  CHECK(d.part(1) == d.part1_elements);
  CHECK(d.part(4) == d.part4_hazards);
  CHECK(coha_test::error_code_of([&] { (void)d.part(5); }) == ErrorCode::invalid_argument);
}

TEST_CASE("articles and list punctuation") {
  SystemModel m = coha_test::load_fixture_model("low");
  m.elements[0].name = "Automatic Controller";
  CHECK(render_description(m).part1_elements.starts_with("Consider a system consisting of an Automatic Controller, "));
  m.elements[0].article = "a";
  CHECK(render_description(m).part1_elements.starts_with("Consider a system consisting of a Automatic Controller, "));
  m.elements[0].article = "";
  CHECK(render_description(m).part1_elements.starts_with("Consider a system consisting of Automatic Controller, "));

  SystemModel two = coha_test::load_fixture_model("low");
  two.elements.resize(2);
  two.relationships = {two.relationships[0]};
  CHECK(render_description(two).part1_elements == "Consider a system consisting of a Controller and Heater.");
}

TEST_CASE("coverage and determinism over the fixtures") {
  for (const char* level : {"low", "moderate", "high"}) {
    const SystemModel m = coha_test::load_fixture_model(level);
    const auto d = render_description(m);
    CHECK(d == render_description(m));
    for (const auto& e : m.elements) CHECK(d.part1_elements.find(e.name) != std::string::npos);
    CHECK(count_sentences(d.part2_relationships) == m.relationships.size());
    CHECK(!d.part1_elements.empty());
    CHECK(!d.part2_relationships.empty());
    CHECK(!d.part4_hazards.empty());
  }
}

TEST_CASE("invalid model cannot be described") {
  SystemModel m = coha_test::load_fixture_model("low");
  m.dangerous_events.clear();
  CHECK(coha_test::error_code_of([&] { render_description(m); }) == ErrorCode::invalid_model);
}
