#include <doctest.h>

#include "coha/session.hpp"
#include "project_fixture.hpp"

using namespace coha;
using coha_test::error_code_of;
using nlohmann::json;

TEST_CASE("responses come from the stored session") {
  coha_test::TempDir dir;
  Project p = coha_test::lowest_project(dir / "p");
  const auto responses = project_responses(p);
  REQUIRE(responses.size() == 6);
  CHECK(responses[0].query_id == "lowest-q000");
  CHECK(responses[0].group_label == "Lowest");
  CHECK(responses[0].model_file == coha_test::kLowModel);
  std::size_t words = 0;
  for (const auto& r : responses) words += word_count(r.text);
  CHECK(words == 862);
  CHECK(!find_response(p, "nope"));
}

TEST_CASE("run_plan through the project sink resumes from the store") {
  coha_test::TempDir dir;
  Project p = Project::init(dir / "p", "demo", {"alice", "bob"});
  p.save_artifact(ArtifactKind::model, coha_test::kLowModel,
                  read_file(coha_test::source_path("models/water_heater_low.json")));
  const SystemModel m = coha_test::load_fixture_model("low");
  auto qs = generate_queries(m);
  SessionOptions o;
  o.session_id = "s1";
  ProjectTranscriptSink sink(p, coha_test::kLowModel);
  {
    ReplayProvider replay(coha_test::lowest_recording());
    const std::vector<Query> first(qs.begin(), qs.begin() + 3);
    run_plan(replay, m, first, &sink, o);
  }
  const Transcript partial = parse_jsonl(p.read_artifact(ArtifactKind::transcript, "s1"));
  CHECK(partial.answered("lowest-q002"));
  CHECK(!partial.answered("lowest-q003"));
  ReplayProvider replay(coha_test::lowest_recording());
  const Transcript full = run_plan(replay, m, qs, &sink, o, partial);
  CHECK(check_transcript(full, false).empty());
  CHECK(project_responses(p).size() == 6);
  CHECK(p.manifest().sessions == std::vector<SessionEntry>{{"s1", coha_test::kLowModel}});
}

TEST_CASE("coding, reconciliation and statistics") {
  coha_test::TempDir dir;
  Project p = coha_test::lowest_project(dir / "p");
  CHECK(error_code_of([&] { stats_text(p); }) == ErrorCode::conflict);
  CHECK(error_code_of([&] { reconcile_query(p, "lowest-q000"); }) == ErrorCode::conflict);

  coha_test::code_lowest(p);
  CHECK(reconcile_all(p).size() == 6);

  const auto a = load_coding(p, "lowest-q000", "alice", Phase::independent);
  REQUIRE(a);
  CHECK(a->assignments.size() == 137);

  const auto k = kappa_listing(p);
  CHECK(k.per_response.size() == 6);
  REQUIRE(k.overall);
  CHECK(k.overall->tokens == 862);

  const json s = json::parse(stats_text(p));
  CHECK(s["summary"][0]["label"] == "Lowest");
  CHECK(s["summary"][0]["total_words"] == 862);
  CHECK(s["summary"][0]["words_per_response_mean"].get<double>() == doctest::Approx(143.6667).epsilon(1e-4));
  CHECK(s["summary"][0]["words_per_response_sd"].get<double>() == doctest::Approx(34.4).epsilon(0.05 / 34.4));
  CHECK(s["presence"][0]["with_correct_useful"] == 5);
  CHECK(s["presence"][0]["with_correct_not_useful"] == 5);
  CHECK(s["presence"][0]["with_incorrect"] == 3);
  CHECK(stats_text(p) == stats_text(p));

  const std::string md = report_markdown(p);
  CHECK(md.find("143.7") != std::string::npos);
  CHECK(md.find("| Lowest | 6 | 5 | 83% | 5 | 83% | 3 | 50% |") != std::string::npos);
}

TEST_CASE("post-discussion codings take precedence") {
  coha_test::TempDir dir;
  Project p = coha_test::lowest_project(dir / "p");
  coha_test::code_lowest(p);
  auto b = *load_coding(p, "lowest-q000", "bob", Phase::independent);
  const auto a = *load_coding(p, "lowest-q000", "alice", Phase::independent);
  b.assignments = a.assignments;
  b.phase = Phase::post_discussion;
  save_coding(p, b);
  CHECK(effective_coding(p, "lowest-q000", "bob")->phase == Phase::post_discussion);
  CHECK(kappa_listing(p, Phase::independent).per_response[0].kappa < 1.0);
  CHECK(kappa_listing(p).per_response[0].kappa == 1.0);
  const FinalCoding f = reconcile_query(p, "lowest-q000");
  CHECK(count_codes(f).indeterminate == 0);
}

TEST_CASE("finals must match a stored response") {
  coha_test::TempDir dir;
  Project p = coha_test::lowest_project(dir / "p");
  FinalCoding f{"lowest-q000", std::vector<FinalCode>(3, FinalCode::correct_useful)};
  p.save_artifact(ArtifactKind::final_coding, "lowest-q000", to_json(f).dump());
  CHECK(error_code_of([&] { analysis_input(p); }) == ErrorCode::token_mismatch);
  FinalCoding g{"ghost", {FinalCode::correct_useful}};
  // The final's own query id must match its name.
  CHECK(error_code_of([&] { p.save_artifact(ArtifactKind::final_coding, "lowest-q001", to_json(g).dump()); }) ==
        ErrorCode::invalid_argument);
}

TEST_CASE("follow-ups are kept out of the analysis") {
  coha_test::TempDir dir;
  Project p = coha_test::lowest_project(dir / "p");
  coha_test::code_lowest(p);
  reconcile_all(p);
  const std::string before = stats_text(p);

  Transcript t = parse_jsonl(p.read_artifact(ArtifactKind::transcript, "lowest-fixture"));
  EchoProvider echo;
  ProjectTranscriptSink sink(p, coha_test::kLowModel);
  SessionOptions o;
  o.session_id = t.session_id;
  LlmSession s = LlmSession::resume(echo, &sink, t, o);
  s.ask_followup("lowest-fixture-f001", "Can you say more about the thermometer?");
  CHECK(find_response(p, "lowest-fixture-f001")->text == "Can you say more about the thermometer?");
  CHECK(!find_response(p, "lowest-fixture-f001")->guideword);
  CHECK(stats_text(p) == before);
}
