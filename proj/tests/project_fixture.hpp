#pragma once

#include "coha/workflow.hpp"
#include "support.hpp"

namespace coha_test {

inline constexpr const char* kLowModel = "water_heater_low.json";

// A project holding the lowest model and its recorded session.
inline coha::Project lowest_project(const std::filesystem::path& root) {
  coha::Project p = coha::Project::init(root, "water heater", {"alice", "bob"});
  p.save_artifact(coha::ArtifactKind::model, kLowModel,
                  coha::read_file(source_path("models/water_heater_low.json")));
  p.save_artifact(coha::ArtifactKind::transcript, lowest_recording().session_id,
                  coha::to_jsonl(lowest_recording()), kLowModel);
  return p;
}

// Stores both reviewers' codings for every lowest response.
inline void code_lowest(coha::Project& p) {
  const auto responses = coha::project_responses(p);
  for (std::size_t i = 0; i < responses.size(); ++i) {
    auto [a, b] = codings_for_tally(responses[i].query_id, kLowestTallies[i]);
    coha::save_coding(p, a);
    coha::save_coding(p, b);
  }
}

}  // namespace coha_test
