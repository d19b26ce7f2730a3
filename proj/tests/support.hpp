#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "coha/annotation.hpp"
#include "coha/error.hpp"
#include "coha/model.hpp"
#include "coha/transcript.hpp"

namespace coha_test {

inline std::filesystem::path source_path(const std::string& relative) {
  return std::filesystem::path(COHA_SOURCE_DIR) / relative;
}

inline coha::SystemModel load_fixture_model(const std::string& level) {
  return coha::load_model_file(source_path("models/water_heater_" + level + ".json").string());
}

inline coha::Transcript lowest_recording() {
  return coha::load_transcript(source_path("tests/fixtures/lowest_replay.jsonl"));
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("coha-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

// Runs f and reports the coha::Error code it threw, if any.
template <typename F>
std::optional<coha::ErrorCode> error_code_of(F&& f) {
  try {
    f();
  } catch (const coha::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

template <typename F>
coha::Error caught(F&& f) {
  try {
    f();
  } catch (const coha::Error& e) {
    return e;
  }
  throw std::runtime_error("expected coha::Error");
}

// Final-code tallies per response: useful, not-useful, incorrect, indeterminate.
using Tally = std::array<std::size_t, 4>;

// Six lowest-complexity responses; word totals 137 142 206 147 128 102.
inline constexpr std::array<Tally, 6> kLowestTallies = {{
    {58, 77, 0, 2},
    {110, 32, 0, 0},
    {68, 138, 0, 0},
    {92, 41, 14, 0},
    {92, 0, 34, 2},
    {0, 55, 45, 2},
}};

// Two reviewer codings whose reconciliation has exactly the given tally.
// Reviewer b downgrades every third useful token to not-useful (rule 1) and
// marks indeterminate tokens incorrect where a marks them useful (rule 3).
inline std::pair<coha::ReviewerCoding, coha::ReviewerCoding> codings_for_tally(
    const std::string& query_id, const Tally& t) {
  using coha::Code;
  coha::ReviewerCoding a{"alice", query_id, {}, coha::Phase::independent, ""};
  coha::ReviewerCoding b{"bob", query_id, {}, coha::Phase::independent, ""};
  for (std::size_t k = 0; k < t[0]; ++k) {
    a.assignments.push_back(Code::correct_useful);
    b.assignments.push_back(k % 3 == 2 ? Code::correct_not_useful : Code::correct_useful);
  }
  for (std::size_t k = 0; k < t[1]; ++k) {
    a.assignments.push_back(Code::correct_not_useful);
    b.assignments.push_back(Code::correct_not_useful);
  }
  for (std::size_t k = 0; k < t[2]; ++k) {
    a.assignments.push_back(k % 4 == 1 ? Code::correct_not_useful : Code::incorrect);
    b.assignments.push_back(Code::incorrect);
  }
  for (std::size_t k = 0; k < t[3]; ++k) {
    a.assignments.push_back(Code::correct_useful);
    b.assignments.push_back(Code::incorrect);
  }
  return {a, b};
}

inline coha::FinalCoding final_for_tally(const std::string& query_id, const Tally& t) {
  auto [a, b] = codings_for_tally(query_id, t);
  return coha::reconcile(a, b);
}

inline std::vector<coha::Span> spans_of(const coha::ReviewerCoding& c) {
  return coha::to_spans<coha::Code>(c.assignments);
}

}  // namespace coha_test
