#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coha/atomic_file.hpp"

namespace coha {

enum class Role { analyst, assistant };

// `acknowledgment` is the optional assistant reply to the description.
enum class MessageKind { description, acknowledgment, query, response };

struct Message {
  Role role = Role::analyst;
  MessageKind kind = MessageKind::description;
  std::string text;
  std::string timestamp;
  std::optional<std::string> query_id;
  // Query messages only; nullopt marks an ad-hoc follow-up.
  std::optional<std::string> guideword;
  // Response messages only.
  bool refusal = false;

  bool operator==(const Message&) const = default;
};

struct Transcript {
  std::string session_id;
  std::string model_fingerprint;
  std::vector<Message> messages;

  bool operator==(const Transcript&) const = default;

  bool answered(std::string_view query_id) const;
  // The trailing query still waiting for its response, if any.
  const Message* pending_query() const;
  const Message* response_for(std::string_view query_id) const;
  const Message* query_for(std::string_view query_id) const;
};

std::string_view to_string(Role r);
std::string_view to_string(MessageKind k);

// Empty iff the transcript satisfies the ordering invariants: description
// first, optional acknowledgment, then (query, response) pairs with matching
// ids and no repeated ids. A single trailing query is tolerated when
// `allow_pending` is set.
std::vector<std::string> check_transcript(const Transcript& t, bool allow_pending = true);

// JSON Lines, one message per line. The description line also carries
// session_id and model_fingerprint.
std::string to_jsonl(const Transcript& t);
Transcript parse_jsonl(std::string_view text);
Transcript load_transcript(const std::filesystem::path& path);

// Same content with every timestamp blanked, for replay comparisons.
Transcript without_timestamps(Transcript t);

class TranscriptSink {
 public:
  virtual ~TranscriptSink() = default;
  // Persists the transcript as it stands; called after every appended message.
  virtual void commit(const Transcript& t) = 0;
};

// Writes transcripts/<session-id>.jsonl style files atomically, refusing to
// shrink or rewrite what is already on disk.
class FileTranscriptSink final : public TranscriptSink {
 public:
  explicit FileTranscriptSink(std::filesystem::path path, FaultHook hook = {})
      : path_(std::move(path)), hook_(std::move(hook)) {}

  void commit(const Transcript& t) override;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  FaultHook hook_;
};

// Throws coha::Error(conflict) unless `next` extends `previous`.
void require_append_only(std::string_view previous, std::string_view next);

}  // namespace coha
