#include "coha/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>

#include "coha/annotation.hpp"
#include "coha/clock.hpp"
#include "coha/error.hpp"
#include "coha/model.hpp"
#include "coha/transcript.hpp"

namespace coha {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kLockFile = ".lock";
constexpr const char* kDirs[] = {"models", "transcripts", "codings", "finals", "stats"};

void require_safe_name(const std::string& name) {
  if (name.empty() || name.find('/') != std::string::npos || name.find('\\') != std::string::npos ||
      name == "." || name == ".." || name.ends_with(kTempSuffix)) {
    throw Error(ErrorCode::invalid_argument, "invalid artifact name '" + name + "'");
  }
}

std::string strip_suffix(const std::string& file, std::string_view suffix) {
  return file.ends_with(suffix) ? file.substr(0, file.size() - suffix.size()) : file;
}

}  // namespace

const SessionEntry* Manifest::find_session(std::string_view id) const {
  for (const auto& s : sessions) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

json to_json(const Manifest& m) {
  json sessions = json::array();
  for (const auto& s : m.sessions) sessions.push_back({{"id", s.id}, {"model", s.model}});
  return {{"schema_version", m.schema_version}, {"project_name", m.project_name},
          {"models", m.models},                 {"sessions", sessions},
          {"reviewers", m.reviewers},           {"created", m.created},
          {"modified", m.modified},             {"query_options", m.query_options}};
}

Manifest manifest_from_json(const json& j) {
  try {
    Manifest m;
    m.schema_version = j.at("schema_version").get<int>();
    m.project_name = j.at("project_name").get<std::string>();
    m.models = j.value("models", std::vector<std::string>{});
    for (const auto& s : j.value("sessions", json::array())) {
      m.sessions.push_back({s.at("id").get<std::string>(), s.value("model", "")});
    }
    m.reviewers = j.value("reviewers", std::vector<std::string>{});
    m.created = j.value("created", "");
    m.modified = j.value("modified", "");
    m.query_options = j.value("query_options", json::object());
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::store_corrupt, std::string("corrupt manifest: ") + e.what());
  }
}

WriterLock::WriterLock(const fs::path& root) {
  const fs::path path = root / kLockFile;
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error(ErrorCode::io, "cannot open lock file '" + path.string() + "'");
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorCode::lock_held, "project lock held by another writer: " + root.string());
  }
}

WriterLock::~WriterLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

Project::Project(Project&&) noexcept = default;
Project& Project::operator=(Project&&) noexcept = default;
Project::~Project() = default;

Project Project::init(const fs::path& root, const std::string& name,
                      std::vector<std::string> reviewers) {
  std::error_code ec;
  if (fs::exists(root, ec)) {
    if (!fs::is_directory(root) || !fs::is_empty(root)) {
      throw Error(ErrorCode::conflict, "path occupied: " + root.string());
    }
  }
  fs::create_directories(root);
  for (const char* d : kDirs) fs::create_directories(root / d);

  Project p;
  p.root_ = root;
  p.lock_ = std::make_unique<WriterLock>(root);
  Manifest m;
  m.project_name = name;
  for (auto& r : reviewers) {
    require_safe_name(r);
    if (r.find('.') != std::string::npos) {
      throw Error(ErrorCode::invalid_argument, "reviewer ids must not contain '.'");
    }
    if (std::find(m.reviewers.begin(), m.reviewers.end(), r) == m.reviewers.end()) {
      m.reviewers.push_back(std::move(r));
    }
  }
  m.created = utc_now();
  m.query_options = options_to_json(QueryOptions{});
  p.write_manifest(std::move(m));
  return p;
}

Project Project::load(const fs::path& root, Access access) {
  Project p;
  p.root_ = root;
  if (access == Access::writer) p.lock_ = std::make_unique<WriterLock>(root);

  const fs::path manifest_path = root / kManifestFile;
  if (!fs::exists(manifest_path)) {
    throw Error(ErrorCode::not_found, "no manifest.json in " + root.string());
  }
  json j;
  try {
    j = json::parse(read_file(manifest_path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::store_corrupt, std::string("corrupt manifest: ") + e.what());
  }
  if (j.is_object() && j.value("schema_version", 0) > kSchemaVersion) {
    throw Error(ErrorCode::schema_too_new,
                "project schema version " + std::to_string(j.value("schema_version", 0)) +
                    " is newer than this reader (" + std::to_string(kSchemaVersion) + ")");
  }
  p.manifest_ = manifest_from_json(j);

  std::vector<std::string> missing;
  std::vector<std::string> corrupt;
  for (const auto& model : p.manifest_.models) {
    const fs::path path = root / "models" / model;
    if (!fs::exists(path)) {
      missing.push_back("model:" + model);
      continue;
    }
    try {
      parse_model(read_file(path));
    } catch (const Error& e) {
      corrupt.push_back("model:" + model);
    }
  }
  for (const auto& s : p.manifest_.sessions) {
    const fs::path path = root / "transcripts" / (s.id + ".jsonl");
    if (!fs::exists(path)) {
      missing.push_back("session:" + s.id);
      continue;
    }
    try {
      if (!check_transcript(load_transcript(path)).empty()) corrupt.push_back("session:" + s.id);
    } catch (const Error&) {
      corrupt.push_back("session:" + s.id);
    }
  }
  if (!missing.empty()) {
    std::string message = "project references missing files:";
    for (const auto& m : missing) message += " " + m;
    throw Error(ErrorCode::not_found, message, std::move(missing));
  }
  if (!corrupt.empty()) {
    std::string message = "project has unreadable files:";
    for (const auto& c : corrupt) message += " " + c;
    throw Error(ErrorCode::store_corrupt, message, std::move(corrupt));
  }

  if (p.lock_) {
    // Leftovers from interrupted writes; the rename never happened, so they
    // are not part of any state.
    std::vector<fs::path> leftovers;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (entry.is_regular_file() && entry.path().string().ends_with(kTempSuffix)) {
        leftovers.push_back(entry.path());
      }
    }
    for (const auto& path : leftovers) fs::remove(path);
  }
  return p;
}

Manifest Project::manifest() const {
  std::lock_guard lock(*mutex_);
  return manifest_;
}

void Project::require_writer() const {
  if (!lock_) throw Error(ErrorCode::lock_held, "project was opened read-only");
}

void Project::write_manifest(Manifest m) {
  m.modified = utc_now();
  atomic_write_file(root_ / kManifestFile, to_json(m).dump(2) + "\n", hook_);
  manifest_ = std::move(m);
}

fs::path Project::artifact_path(ArtifactKind kind, const std::string& name) const {
  switch (kind) {
    case ArtifactKind::model: return root_ / "models" / name;
    case ArtifactKind::transcript: return root_ / "transcripts" / (name + ".jsonl");
    case ArtifactKind::coding: return root_ / "codings" / (name + ".json");
    case ArtifactKind::final_coding: return root_ / "finals" / (name + ".json");
    case ArtifactKind::stats: return root_ / "stats" / (name + ".json");
    case ArtifactKind::report: return root_ / "stats" / (name + ".md");
  }
  return root_;
}

Manifest Project::save_artifact(ArtifactKind kind, const std::string& name, std::string_view payload,
                                const std::string& model) {
  require_writer();
  require_safe_name(name);
  std::lock_guard lock(*mutex_);
  Manifest next = manifest_;
  const fs::path path = artifact_path(kind, name);

  try {
    switch (kind) {
      case ArtifactKind::model: {
        if (!name.ends_with(".json")) {
          throw Error(ErrorCode::invalid_argument, "model file names must end in .json");
        }
        parse_model(payload);
        if (std::find(next.models.begin(), next.models.end(), name) == next.models.end()) {
          next.models.push_back(name);
        }
        break;
      }
      case ArtifactKind::transcript: {
        const Transcript t = parse_jsonl(payload);
        if (auto problems = check_transcript(t); !problems.empty()) {
          throw Error(ErrorCode::invalid_argument, "transcript violates protocol: " + problems.front(),
                      problems);
        }
        if (!t.messages.empty() && t.session_id != name) {
          throw Error(ErrorCode::invalid_argument, "transcript session id does not match '" + name + "'");
        }
        if (fs::exists(path)) require_append_only(read_file(path), payload);
        if (!next.find_session(name)) {
          if (!model.empty() &&
              std::find(next.models.begin(), next.models.end(), model) == next.models.end()) {
            throw Error(ErrorCode::not_found, "session model '" + model + "' is not in the project",
                        {model});
          }
          next.sessions.push_back({name, model});
        }
        break;
      }
      case ArtifactKind::coding: {
        const auto first = name.find('.');
        const auto last = name.rfind('.');
        if (first == std::string::npos || first == last) {
          throw Error(ErrorCode::invalid_argument, "coding names are <query>.<reviewer>.<phase>");
        }
        const std::string query = name.substr(0, first);
        const std::string reviewer = name.substr(first + 1, last - first - 1);
        const Phase phase = phase_from_string(name.substr(last + 1));
        const json j = json::parse(payload);
        const auto spans = spans_from_json(j.at("spans"));
        if (j.at("query_id") != query || j.at("reviewer_id") != reviewer ||
            phase_from_string(j.at("phase").get<std::string>()) != phase) {
          throw Error(ErrorCode::invalid_argument, "coding payload does not match '" + name + "'");
        }
        if (!next.reviewers.empty() &&
            std::find(next.reviewers.begin(), next.reviewers.end(), reviewer) == next.reviewers.end()) {
          throw Error(ErrorCode::unauthorized, "reviewer '" + reviewer + "' is not registered",
                      {reviewer});
        }
        (void)spans;
        break;
      }
      case ArtifactKind::final_coding: {
        if (final_from_json(json::parse(payload)).query_id != name) {
          throw Error(ErrorCode::invalid_argument, "final coding does not match '" + name + "'");
        }
        break;
      }
      case ArtifactKind::stats: {
        if (!json::accept(payload)) throw Error(ErrorCode::malformed_document, "stats payload is not JSON");
        break;
      }
      case ArtifactKind::report:
        break;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_document, std::string("malformed ") + name + ": " + e.what());
  }

  fs::create_directories(path.parent_path());
  atomic_write_file(path, payload, hook_);
  write_manifest(std::move(next));
  return manifest_;
}

std::string Project::read_artifact(ArtifactKind kind, const std::string& name) const {
  require_safe_name(name);
  const fs::path path = artifact_path(kind, name);
  if (!fs::exists(path)) throw Error(ErrorCode::not_found, "no artifact " + path.string(), {name});
  return read_file(path);
}

bool Project::has_artifact(ArtifactKind kind, const std::string& name) const {
  return fs::exists(artifact_path(kind, name));
}

std::vector<std::string> Project::list_artifacts(ArtifactKind kind) const {
  const fs::path dir = artifact_path(kind, "x").parent_path();
  std::string_view suffix;
  switch (kind) {
    case ArtifactKind::model: suffix = ""; break;
    case ArtifactKind::transcript: suffix = ".jsonl"; break;
    case ArtifactKind::report: suffix = ".md"; break;
    default: suffix = ".json"; break;
  }
  std::vector<std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string file = entry.path().filename().string();
    if (!entry.is_regular_file() || file.ends_with(kTempSuffix)) continue;
    if (!suffix.empty() && !file.ends_with(suffix)) continue;
    out.push_back(suffix.empty() ? file : strip_suffix(file, suffix));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void Project::add_reviewer(const std::string& reviewer_id) {
  require_writer();
  require_safe_name(reviewer_id);
  if (reviewer_id.find('.') != std::string::npos) {
    throw Error(ErrorCode::invalid_argument, "reviewer ids must not contain '.'");
  }
  std::lock_guard lock(*mutex_);
  Manifest next = manifest_;
  if (std::find(next.reviewers.begin(), next.reviewers.end(), reviewer_id) != next.reviewers.end()) {
    return;
  }
  next.reviewers.push_back(reviewer_id);
  write_manifest(std::move(next));
}

void Project::set_query_options(const QueryOptions& options) {
  require_writer();
  std::lock_guard lock(*mutex_);
  Manifest next = manifest_;
  next.query_options = options_to_json(options);
  write_manifest(std::move(next));
}

QueryOptions Project::query_options() const {
  std::lock_guard lock(*mutex_);
  return options_from_json(manifest_.query_options);
}

}  // namespace coha
