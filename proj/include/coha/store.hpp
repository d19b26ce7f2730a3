#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coha/atomic_file.hpp"
#include "coha/queries.hpp"

namespace coha {

inline constexpr int kSchemaVersion = 1;

struct SessionEntry {
  std::string id;
  std::string model;  // file name under models/
  bool operator==(const SessionEntry&) const = default;
};

struct Manifest {
  int schema_version = kSchemaVersion;
  std::string project_name;
  std::vector<std::string> models;  // file names under models/, in group order
  std::vector<SessionEntry> sessions;
  std::vector<std::string> reviewers;
  std::string created;
  std::string modified;
  nlohmann::json query_options = nlohmann::json::object();

  bool operator==(const Manifest&) const = default;
  const SessionEntry* find_session(std::string_view id) const;
};

nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);

enum class ArtifactKind { model, transcript, coding, final_coding, stats, report };

// Holds flock() on <root>/.lock for the lifetime of the object.
class WriterLock {
 public:
  explicit WriterLock(const std::filesystem::path& root);
  ~WriterLock();
  WriterLock(const WriterLock&) = delete;
  WriterLock& operator=(const WriterLock&) = delete;

 private:
  int fd_ = -1;
};

enum class Access { read_only, writer };

// A project directory:
//
//   manifest.json
//   models/<file>.json
//   transcripts/<session-id>.jsonl
//   codings/<query-id>.<reviewer-id>.<phase>.json
//   finals/<query-id>.json
//   stats/report.json, stats/report.md
//
// Every write goes through atomic_write_file and the manifest is written
// last. A writer holds the project lock; readers need no lock.
class Project {
 public:
  static Project init(const std::filesystem::path& root, const std::string& name,
                      std::vector<std::string> reviewers = {});
  // Validates the manifest and every file it references; throws
  // coha::Error(store_corrupt | schema_too_new | not_found | lock_held).
  static Project load(const std::filesystem::path& root, Access access = Access::read_only);

  Project(Project&&) noexcept;
  Project& operator=(Project&&) noexcept;
  ~Project();

  const std::filesystem::path& root() const { return root_; }
  Manifest manifest() const;
  bool writable() const { return lock_ != nullptr; }

  // `name`: model file name, session id, "<query>.<reviewer>.<phase>",
  // query id, or "report" for stats/report kinds. `model` links a transcript
  // to its model file. Returns the updated manifest.
  Manifest save_artifact(ArtifactKind kind, const std::string& name, std::string_view payload,
                         const std::string& model = {});
  std::string read_artifact(ArtifactKind kind, const std::string& name) const;
  bool has_artifact(ArtifactKind kind, const std::string& name) const;
  std::vector<std::string> list_artifacts(ArtifactKind kind) const;
  std::filesystem::path artifact_path(ArtifactKind kind, const std::string& name) const;

  void add_reviewer(const std::string& reviewer_id);
  void set_query_options(const QueryOptions& options);
  QueryOptions query_options() const;

  // Simulated crash points for durability tests.
  void set_fault_hook(FaultHook hook) { hook_ = std::move(hook); }

 private:
  Project() = default;
  void write_manifest(Manifest m);
  void require_writer() const;

  std::filesystem::path root_;
  Manifest manifest_;
  std::unique_ptr<WriterLock> lock_;
  std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
  FaultHook hook_;
};

}  // namespace coha
