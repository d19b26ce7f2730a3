#include "coha/session.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <random>

#include "coha/error.hpp"

namespace coha {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string new_session_id() {
  std::random_device rd;
  std::uniform_int_distribution<unsigned> dist(0, 0xffff);
  std::string stamp = utc_now();
  std::string id = "s";
  for (char c : stamp) {
    if (std::isdigit(static_cast<unsigned char>(c))) id += c;
  }
  char suffix[16];
  std::snprintf(suffix, sizeof suffix, "-%04x%04x", dist(rd), dist(rd));
  return id + suffix;
}

LlmSession::LlmSession(ChatProvider& provider, TranscriptSink* sink, SessionOptions options)
    : provider_(&provider), sink_(sink), options_(std::move(options)) {
  if (options_.max_retries < 0) throw Error(ErrorCode::invalid_argument, "max_retries must be >= 0");
  if (!options_.clock) options_.clock = utc_now;
  transcript_.session_id = options_.session_id.empty() ? new_session_id() : options_.session_id;
}

LlmSession::LlmSession(LlmSession&& other) noexcept
    : provider_(other.provider_),
      sink_(other.sink_),
      options_(std::move(other.options_)),
      transcript_(std::move(other.transcript_)) {}

LlmSession LlmSession::resume(ChatProvider& provider, TranscriptSink* sink, Transcript existing,
                              SessionOptions options) {
  if (auto problems = check_transcript(existing); !problems.empty()) {
    throw Error(ErrorCode::protocol, "cannot resume session: " + problems.front(), problems);
  }
  if (existing.messages.empty()) {
    throw Error(ErrorCode::protocol, "cannot resume a session that was never opened");
  }
  options.session_id = existing.session_id;
  LlmSession s(provider, sink, std::move(options));
  s.transcript_ = std::move(existing);
  // Interrupted right after the description: the acknowledgment was never received.
  if (s.transcript_.messages.size() == 1) s.request_acknowledgment();
  return s;
}

bool LlmSession::is_open() const { return !transcript_.messages.empty(); }

void LlmSession::append(Message m) {
  transcript_.messages.push_back(std::move(m));
  if (sink_ != nullptr) sink_->commit(transcript_);
}

template <typename F>
auto LlmSession::with_retries(F&& call) {
  for (int attempt = 0;; ++attempt) {
    try {
      return call();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::transport || attempt >= options_.max_retries) throw;
    }
  }
}

void LlmSession::open(const DescriptionText& description) {
  std::unique_lock lock(in_flight_, std::try_to_lock);
  if (!lock.owns_lock()) throw Error(ErrorCode::session_busy, "session busy");
  if (is_open()) throw Error(ErrorCode::protocol, "session already open");

  const std::string now = options_.clock();
  transcript_.model_fingerprint = provider_->fingerprint(now.substr(0, 10));
  Message d;
  d.role = Role::analyst;
  d.kind = MessageKind::description;
  d.text = description.full_text;
  d.timestamp = now;
  append(std::move(d));

  request_acknowledgment();
}

void LlmSession::request_acknowledgment() {
  auto ack = with_retries([&] { return provider_->acknowledge(transcript_.messages); });
  if (ack) {
    Message a;
    a.role = Role::assistant;
    a.kind = MessageKind::acknowledgment;
    a.text = std::move(ack->text);
    a.timestamp = options_.clock();
    append(std::move(a));
  }
}

Message LlmSession::ask(const Query& query) {
  return ask_impl(query.id, query.text, std::string(to_string(query.guideword)));
}

Message LlmSession::ask_followup(const std::string& query_id, const std::string& text) {
  return ask_impl(query_id, text, std::nullopt);
}

Message LlmSession::ask_impl(const std::string& query_id, const std::string& text,
                             std::optional<std::string> guideword) {
  std::unique_lock lock(in_flight_, std::try_to_lock);
  if (!lock.owns_lock()) throw Error(ErrorCode::session_busy, "session busy");
  if (!is_open()) throw Error(ErrorCode::protocol, "ask before open_session");
  if (query_id.empty()) throw Error(ErrorCode::invalid_argument, "query id must not be empty");
  if (transcript_.answered(query_id)) {
    throw Error(ErrorCode::duplicate_query, "duplicate query '" + query_id + "'", {query_id});
  }

  if (const Message* pending = transcript_.pending_query()) {
    if (pending->query_id != query_id) {
      throw Error(ErrorCode::protocol,
                  "query '" + pending->query_id.value_or("") + "' is still unanswered");
    }
    if (pending->text != text) {
      throw Error(ErrorCode::protocol, "resumed query '" + query_id + "' has different text");
    }
  } else {
    Message q;
    q.role = Role::analyst;
    q.kind = MessageKind::query;
    q.text = text;
    q.timestamp = options_.clock();
    q.query_id = query_id;
    q.guideword = std::move(guideword);
    append(std::move(q));
  }

  Completion c = with_retries([&] { return provider_->complete(transcript_.messages); });
  Message r;
  r.role = Role::assistant;
  r.kind = MessageKind::response;
  r.text = std::move(c.text);
  r.timestamp = options_.clock();
  r.query_id = query_id;
  r.refusal = c.refusal;
  append(r);
  return r;
}

Transcript run_plan(ChatProvider& provider, const SystemModel& model,
                    const std::vector<Query>& queries, TranscriptSink* sink, SessionOptions options,
                    std::optional<Transcript> existing) {
  for (std::size_t i = 1; i < queries.size(); ++i) {
    if (queries[i].ordinal <= queries[i - 1].ordinal) {
      throw Error(ErrorCode::invalid_argument, "queries must be ordered by ordinal");
    }
  }
  const DescriptionText description = render_description(model);

  auto session = [&] {
    if (existing && !existing->messages.empty()) {
      if (existing->messages.front().text != description.full_text) {
        throw Error(ErrorCode::protocol, "existing transcript was opened with a different description");
      }
      return LlmSession::resume(provider, sink, std::move(*existing), std::move(options));
    }
    LlmSession s(provider, sink, std::move(options));
    s.open(description);
    return s;
  }();

  for (const auto& q : queries) {
    if (session.transcript().answered(q.id)) continue;
    session.ask(q);
  }
  return session.transcript();
}

}  // namespace coha
