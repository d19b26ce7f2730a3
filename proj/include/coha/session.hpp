#pragma once

#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "coha/clock.hpp"
#include "coha/description.hpp"
#include "coha/providers.hpp"
#include "coha/queries.hpp"
#include "coha/transcript.hpp"

namespace coha {

std::string new_session_id();

struct SessionOptions {
  std::string session_id;  // generated when empty
  int max_retries = 0;     // transport errors only
  Clock clock = utc_now;
};

// A context-bearing chat session under the first-response protocol: the
// description goes first, queries go one at a time, each query gets exactly
// one stored response and nothing is ever regenerated. Every appended
// message is committed to the sink before the next step.
class LlmSession {
 public:
  LlmSession(ChatProvider& provider, TranscriptSink* sink, SessionOptions options = {});

  // Continues an existing transcript. A trailing unanswered query is re-sent
  // by the next ask() for the same query id.
  static LlmSession resume(ChatProvider& provider, TranscriptSink* sink, Transcript existing,
                           SessionOptions options = {});

  LlmSession(LlmSession&& other) noexcept;
  LlmSession& operator=(LlmSession&&) = delete;

  void open(const DescriptionText& description);
  bool is_open() const;

  Message ask(const Query& query);
  // Ad-hoc follow-up: recorded as a query with no guideword.
  Message ask_followup(const std::string& query_id, const std::string& text);

  const Transcript& transcript() const { return transcript_; }
  const std::string& session_id() const { return transcript_.session_id; }

 private:
  Message ask_impl(const std::string& query_id, const std::string& text,
                   std::optional<std::string> guideword);
  void append(Message m);
  void request_acknowledgment();
  template <typename F>
  auto with_retries(F&& call);

  ChatProvider* provider_;
  TranscriptSink* sink_;
  SessionOptions options_;
  Transcript transcript_;
  std::mutex in_flight_;
};

// Opens (or resumes) a session and asks every query in ordinal order,
// skipping ones already answered in `existing`.
Transcript run_plan(ChatProvider& provider, const SystemModel& model,
                    const std::vector<Query>& queries, TranscriptSink* sink,
                    SessionOptions options = {}, std::optional<Transcript> existing = {});

}  // namespace coha
