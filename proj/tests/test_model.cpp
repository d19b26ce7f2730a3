#include <doctest.h>

#include <algorithm>
#include <random>

#include "coha/model.hpp"
#include "support.hpp"

using namespace coha;
using coha_test::caught;
using coha_test::error_code_of;
using nlohmann::json;

namespace {

json lowest_json() {
  return json::parse(read_file(coha_test::source_path("models/water_heater_low.json")));
}

bool has_rule(const std::vector<Violation>& v, const std::string& rule, const std::string& id = {}) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) {
    return x.rule == rule && (id.empty() || x.id == id);
  });
}

}  // namespace

TEST_CASE("lowest fixture parses to 4 elements, 1 action, 1 event") {
  const SystemModel m = coha_test::load_fixture_model("low");
  CHECK(m.elements.size() == 4);
  CHECK(m.control_actions.size() == 1);
  CHECK(m.dangerous_events.size() == 1);
  CHECK(m.elements[0].name == "Controller");
  CHECK(m.control_actions[0].signal_noun_phrase == "the enable signal");
  CHECK(m.closed_world);
  CHECK(validate(m).empty());
}

TEST_CASE("shipped fixtures are valid") {
  for (const char* level : {"low", "moderate", "high"}) {
    CAPTURE(level);
    CHECK(validate(coha_test::load_fixture_model(level)).empty());
  }
}

TEST_CASE("zero elements is rejected with 'no elements'") {
  json j = lowest_json();
  j["elements"] = json::array();
  const Error e = caught([&] { parse_model(j.dump()); });
  CHECK(e.code() == ErrorCode::invalid_model);
  CHECK(std::string(e.what()).find("no elements") != std::string::npos);
}

TEST_CASE("dangling reference names the missing id") {
  json j = lowest_json();
  j["relationships"][3]["subject"] = "Pump";
  const Error e = caught([&] { parse_model(j.dump()); });
  CHECK(e.code() == ErrorCode::invalid_model);
  CHECK(std::string(e.what()).find("Pump") != std::string::npos);
  CHECK(std::find(e.details().begin(), e.details().end(), "dangling-reference:Pump") != e.details().end());
}

TEST_CASE("validate reports rule codes") {
  SystemModel m = coha_test::load_fixture_model("low");

  SUBCASE("duplicate id") {
    m.elements[1].id = "tank";
    const auto v = validate(m);
    CHECK(has_rule(v, "duplicate-id", "tank"));
  }
  SUBCASE("sensor issuing a control action") {
    m.control_actions[0].issuer = "thermometer";
    CHECK(has_rule(validate(m), "issuer-not-controller"));
  }
  SUBCASE("no dangerous events") {
    m.dangerous_events.clear();
    CHECK(has_rule(validate(m), "no-dangerous-events"));
  }
  SUBCASE("assumption without a period") {
    m.assumptions[0].sentence = "No period";
    CHECK(has_rule(validate(m), "assumption-format"));
  }
  SUBCASE("definition sentence with the wrong opening") {
    m.dangerous_events[0].definition_sentence = "Hot water is bad.";
    CHECK(has_rule(validate(m), "event-definition-format"));
  }
  SUBCASE("missing controller") {
    m.elements[0].kind = ElementKind::process;
    CHECK(has_rule(validate(m), "no-controller"));
  }
  SUBCASE("empty signal phrase") {
    m.control_actions[0].signal_noun_phrase = "";
    CHECK(has_rule(validate(m), "empty-signal"));
  }
}

TEST_CASE("malformed documents") {
  CHECK(error_code_of([] { parse_model("{not json"); }) == ErrorCode::malformed_document);
  CHECK(error_code_of([] { parse_model("[]"); }) == ErrorCode::malformed_document);

  json j = lowest_json();
  j["colour"] = "blue";
  CHECK(error_code_of([&] { parse_model(j.dump()); }) == ErrorCode::malformed_document);

  j = lowest_json();
  j["elements"][0]["kind"] = "robot";
  CHECK(error_code_of([&] { parse_model(j.dump()); }) == ErrorCode::malformed_document);

  j = lowest_json();
  j["relationships"][0]["template_kind"] = "controls";
  CHECK(error_code_of([&] { parse_model(j.dump()); }) == ErrorCode::malformed_document);
}

TEST_CASE("closed_world defaults to true and clause_text may be a plain string") {
  json j = lowest_json();
  j.erase("closed_world");
  j["relationships"][3]["clause_text"] = "the current water temperature inside the Water Tank";
  const SystemModel m = parse_model(j.dump());
  CHECK(m.closed_world);
  CHECK(m.relationships[3].clause_text.clause == "the current water temperature inside the Water Tank");
}

TEST_CASE("round trip: parse, serialize, parse") {
  for (const char* level : {"low", "moderate", "high"}) {
    const SystemModel m = coha_test::load_fixture_model(level);
    const SystemModel again = parse_model(serialize_model(m));
    CHECK(again == m);
    CHECK(serialize_model(again) == serialize_model(m));
  }
}

// Random mutations of a valid document: whatever parse_model accepts must
// validate cleanly and resolve every reference.
TEST_CASE("accepted documents satisfy the invariants") {
  std::mt19937 rng(7);
  const json base = json::parse(read_file(coha_test::source_path("models/water_heater_moderate.json")));
  const std::vector<std::string> ids = {"controller", "heater", "tank", "thermometer", "pump", "Pump", ""};
  int accepted = 0;
  for (int trial = 0; trial < 300; ++trial) {
    json j = base;
    const int edits = 1 + static_cast<int>(rng() % 3);
    for (int e = 0; e < edits; ++e) {
      switch (rng() % 6) {
        case 0: j["control_actions"][rng() % j["control_actions"].size()]["issuer"] = ids[rng() % ids.size()]; break;
        case 1: j["relationships"][rng() % j["relationships"].size()]["subject"] = ids[rng() % ids.size()]; break;
        case 2: j["elements"][rng() % j["elements"].size()]["id"] = ids[rng() % ids.size()]; break;
        case 3: j["elements"].erase(rng() % j["elements"].size()); break;
        case 4: j["assumptions"][0]["sentence"] = (rng() % 2) ? "Ends well." : "Does not"; break;
        default: break;
      }
    }
    try {
      const SystemModel m = parse_model(j.dump());
      ++accepted;
      CHECK(validate(m).empty());
      for (const auto& a : m.control_actions) {
        CHECK(m.find_element(a.issuer) != nullptr);
        CHECK(m.find_element(a.receiver) != nullptr);
      }
      for (const auto& r : m.relationships) {
        CHECK(m.find_element(r.subject) != nullptr);
        if (r.object) CHECK(m.find_element(*r.object) != nullptr);
      }
    } catch (const Error& e) {
      CHECK((e.code() == ErrorCode::invalid_model || e.code() == ErrorCode::malformed_document));
    }
  }
  CHECK(accepted > 0);
}
