#include <doctest.h>

#include <fstream>
#include <map>

#include "coha/store.hpp"
#include "support.hpp"

using namespace coha;
using coha_test::error_code_of;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string model_text() { return read_file(coha_test::source_path("models/water_heater_low.json")); }

// The recorded transcript cut after `messages` messages.
std::string transcript_prefix(std::size_t messages) {
  Transcript t = coha_test::lowest_recording();
  t.messages.resize(messages);
  return to_jsonl(t);
}

std::string coding_text(const std::string& qid, const std::string& reviewer, std::size_t tokens) {
  const std::vector<Span> spans = {{0, tokens, Code::correct_useful}};
  return to_json(coding_from_spans(reviewer, qid, tokens, spans)).dump();
}

struct Step {
  ArtifactKind kind;
  std::string name;
  std::string payload;
  std::string model;
};

std::vector<Step> save_sequence() {
  std::vector<Step> steps;
  steps.push_back({ArtifactKind::model, "water_heater_low.json", model_text(), ""});
  const std::string sid = coha_test::lowest_recording().session_id;
  for (std::size_t n = 2; n <= 14; n += 2) {
    steps.push_back({ArtifactKind::transcript, sid, transcript_prefix(n), "water_heater_low.json"});
  }
  steps.push_back({ArtifactKind::coding, "lowest-q000.alice.independent", coding_text("lowest-q000", "alice", 137), ""});
  steps.push_back({ArtifactKind::coding, "lowest-q000.bob.independent", coding_text("lowest-q000", "bob", 137), ""});
  FinalCoding f{"lowest-q000", std::vector<FinalCode>(137, FinalCode::correct_useful)};
  steps.push_back({ArtifactKind::final_coding, "lowest-q000", to_json(f).dump(), ""});
  steps.push_back({ArtifactKind::stats, "report", "{\"ok\":true}", ""});
  steps.push_back({ArtifactKind::report, "report", "# report\n", ""});
  return steps;
}

struct Crash {};

}  // namespace

TEST_CASE("init creates the skeleton and round-trips the manifest") {
  coha_test::TempDir dir;
  const Manifest m = Project::init(dir / "p", "demo", {"alice", "bob"}).manifest();
  for (const char* sub : {"models", "transcripts", "codings", "finals", "stats"}) CHECK(fs::is_directory(dir / ("p/" + std::string(sub))));
  CHECK(m.sessions.empty());
  CHECK(m.reviewers == std::vector<std::string>{"alice", "bob"});
  CHECK(Project::load(dir / "p").manifest() == m);
  CHECK(manifest_from_json(to_json(m)) == m);
}

TEST_CASE("init refuses an occupied path") {
  coha_test::TempDir dir;
  std::ofstream(dir / "stray.txt") << "x";
  CHECK(error_code_of([&] { Project::init(dir.path(), "demo"); }) == ErrorCode::conflict);
  fs::create_directories(dir / "empty");
  CHECK_NOTHROW(Project::init(dir / "empty", "demo"));
}

TEST_CASE("save then load reads the payload back") {
  coha_test::TempDir dir;
  {
    Project p = Project::init(dir / "p", "demo", {"alice", "bob"});
    for (const auto& s : save_sequence()) p.save_artifact(s.kind, s.name, s.payload, s.model);
  }
  const Project p = Project::load(dir / "p");
  std::map<std::string, std::string> last;
  for (const auto& s : save_sequence()) last[p.artifact_path(s.kind, s.name).string()] = s.payload;
  for (const auto& s : save_sequence()) CHECK(p.read_artifact(s.kind, s.name) == last[p.artifact_path(s.kind, s.name).string()]);
  CHECK(p.manifest().sessions.size() == 1);
  CHECK(p.manifest().sessions[0].model == "water_heater_low.json");
  CHECK(p.list_artifacts(ArtifactKind::coding) ==
        std::vector<std::string>{"lowest-q000.alice.independent", "lowest-q000.bob.independent"});
}

TEST_CASE("load lists every missing referenced file") {
  coha_test::TempDir dir;
  {
    Project p = Project::init(dir / "p", "demo");
    for (const auto& s : save_sequence()) p.save_artifact(s.kind, s.name, s.payload, s.model);
  }
  fs::remove(dir / "p/transcripts/lowest-fixture.jsonl");
  fs::remove(dir / "p/models/water_heater_low.json");
  const Error e = coha_test::caught([&] { Project::load(dir / "p"); });
  CHECK(e.code() == ErrorCode::not_found);
  CHECK(e.details() == std::vector<std::string>{"model:water_heater_low.json", "session:lowest-fixture"});
  CHECK(std::string(e.what()).find("lowest-fixture") != std::string::npos);
}

TEST_CASE("corrupt and future manifests") {
  coha_test::TempDir dir;
  { Project::init(dir / "p", "demo"); }
  json j = json::parse(read_file(dir / "p/manifest.json"));
  j["schema_version"] = kSchemaVersion + 1;
  atomic_write_file(dir / "p/manifest.json", j.dump());
  CHECK(error_code_of([&] { Project::load(dir / "p"); }) == ErrorCode::schema_too_new);
  atomic_write_file(dir / "p/manifest.json", "{\"schema_version\": 1, \"project_na");
  CHECK(error_code_of([&] { Project::load(dir / "p"); }) == ErrorCode::store_corrupt);
  CHECK(error_code_of([&] { Project::load(dir / "nowhere"); }) == ErrorCode::not_found);
}

TEST_CASE("payload validation") {
  coha_test::TempDir dir;
  Project p = Project::init(dir / "p", "demo", {"alice", "bob"});
  CHECK(error_code_of([&] { p.save_artifact(ArtifactKind::model, "m.json", "[]"); }) ==
        ErrorCode::malformed_document);
  CHECK(error_code_of([&] { p.save_artifact(ArtifactKind::model, "../m.json", model_text()); }) ==
        ErrorCode::invalid_argument);
  CHECK(error_code_of([&] {
          p.save_artifact(ArtifactKind::coding, "q.mallory.independent", coding_text("q", "mallory", 3));
        }) == ErrorCode::unauthorized);
  CHECK(error_code_of([&] {
          p.save_artifact(ArtifactKind::coding, "q.alice.independent", coding_text("q", "bob", 3));
        }) == ErrorCode::invalid_argument);
  CHECK(error_code_of([&] { p.save_artifact(ArtifactKind::stats, "report", "{"); }) ==
        ErrorCode::malformed_document);
  CHECK(error_code_of([&] {
          p.save_artifact(ArtifactKind::transcript, "lowest-fixture", transcript_prefix(4), "missing.json");
        }) == ErrorCode::not_found);
}

TEST_CASE("transcripts are append-only") {
  coha_test::TempDir dir;
  Project p = Project::init(dir / "p", "demo");
  p.save_artifact(ArtifactKind::transcript, "lowest-fixture", transcript_prefix(6));
  p.save_artifact(ArtifactKind::transcript, "lowest-fixture", transcript_prefix(8));
  CHECK(error_code_of([&] { p.save_artifact(ArtifactKind::transcript, "lowest-fixture", transcript_prefix(4)); }) ==
        ErrorCode::conflict);
  Transcript t = coha_test::lowest_recording();
  t.messages.resize(8);
  t.messages[3].text = "rewritten";
  CHECK(error_code_of([&] { p.save_artifact(ArtifactKind::transcript, "lowest-fixture", to_jsonl(t)); }) ==
        ErrorCode::conflict);
  CHECK(p.read_artifact(ArtifactKind::transcript, "lowest-fixture") == transcript_prefix(8));
}

TEST_CASE("single writer, many readers") {
  coha_test::TempDir dir;
  Project writer = Project::init(dir / "p", "demo");
  CHECK(error_code_of([&] { Project::load(dir / "p", Access::writer); }) == ErrorCode::lock_held);
  Project reader = Project::load(dir / "p");
  CHECK(!reader.writable());
  CHECK(error_code_of([&] { reader.save_artifact(ArtifactKind::report, "report", "x"); }) == ErrorCode::lock_held);
  CHECK_NOTHROW(Project::load(dir / "p"));
  { Project released = std::move(writer); }
  CHECK_NOTHROW(Project::load(dir / "p", Access::writer));
}

TEST_CASE("writer load sweeps leftover temp files") {
  coha_test::TempDir dir;
  { Project::init(dir / "p", "demo"); }
  std::ofstream(dir / "p/codings/x.json.1-1.tmp-coha") << "partial";
  { Project reader = Project::load(dir / "p"); }
  CHECK(fs::exists(dir / "p/codings/x.json.1-1.tmp-coha"));
  { Project writer = Project::load(dir / "p", Access::writer); }
  CHECK(!fs::exists(dir / "p/codings/x.json.1-1.tmp-coha"));
}

TEST_CASE("crash at any write stage leaves a loadable project") {
  const auto steps = save_sequence();
  // Every payload ever written under each path.
  std::map<std::string, std::vector<std::string>> versions;
  for (const auto& s : steps) versions[std::to_string(static_cast<int>(s.kind)) + "/" + s.name].push_back(s.payload);

  int crash_points = 0;
  for (int k = 0;; ++k) {
    coha_test::TempDir dir;
    bool crashed = false;
    std::size_t crashed_step = 0;
    {
      Project p = Project::init(dir / "p", "demo", {"alice", "bob"});
      int stage_calls = 0;
      p.set_fault_hook([&](WriteStage, const fs::path&) {
        if (stage_calls++ == k) throw Crash{};
      });
      for (std::size_t i = 0; i < steps.size() && !crashed; ++i) {
        try {
          p.save_artifact(steps[i].kind, steps[i].name, steps[i].payload, steps[i].model);
        } catch (const Crash&) {
          crashed = true;
          crashed_step = i;
        }
      }
    }
    if (!crashed) break;
    ++crash_points;
    CAPTURE(k);

    const Project after = Project::load(dir / "p");
    for (const auto& s : steps) {
      if (!after.has_artifact(s.kind, s.name)) continue;
      const auto& options = versions[std::to_string(static_cast<int>(s.kind)) + "/" + s.name];
      const std::string on_disk = after.read_artifact(s.kind, s.name);
      CHECK(std::find(options.begin(), options.end(), on_disk) != options.end());
    }

    // Recovery: reopen for writing and replay from the interrupted step.
    Project p = Project::load(dir / "p", Access::writer);
    for (std::size_t i = crashed_step; i < steps.size(); ++i) {
      p.save_artifact(steps[i].kind, steps[i].name, steps[i].payload, steps[i].model);
    }
    const Project done = Project::load(dir / "p");
    for (const auto& s : steps) {
      const auto& options = versions[std::to_string(static_cast<int>(s.kind)) + "/" + s.name];
      CHECK(done.read_artifact(s.kind, s.name) == options.back());
    }
    for (const auto& e : fs::recursive_directory_iterator(dir / "p")) {
      CHECK(!e.path().string().ends_with(".tmp-coha"));
    }
  }
  CHECK(crash_points >= 100);
}
