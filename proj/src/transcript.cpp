#include "coha/transcript.hpp"

#include <set>

#include "coha/error.hpp"

namespace coha {

using nlohmann::json;

namespace {

Role role_from_string(std::string_view s) {
  if (s == "analyst") return Role::analyst;
  if (s == "assistant") return Role::assistant;
  throw Error(ErrorCode::malformed_document, "unknown role '" + std::string(s) + "'");
}

MessageKind kind_from_string(std::string_view s) {
  for (auto k : {MessageKind::description, MessageKind::acknowledgment, MessageKind::query,
                 MessageKind::response}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::malformed_document, "unknown message kind '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(Role r) { return r == Role::analyst ? "analyst" : "assistant"; }

std::string_view to_string(MessageKind k) {
  switch (k) {
    case MessageKind::description: return "description";
    case MessageKind::acknowledgment: return "acknowledgment";
    case MessageKind::query: return "query";
    case MessageKind::response: return "response";
  }
  return "description";
}

bool Transcript::answered(std::string_view query_id) const {
  return response_for(query_id) != nullptr;
}

const Message* Transcript::pending_query() const {
  if (messages.empty() || messages.back().kind != MessageKind::query) return nullptr;
  return &messages.back();
}

const Message* Transcript::response_for(std::string_view query_id) const {
  for (const auto& m : messages) {
    if (m.kind == MessageKind::response && m.query_id == query_id) return &m;
  }
  return nullptr;
}

const Message* Transcript::query_for(std::string_view query_id) const {
  for (const auto& m : messages) {
    if (m.kind == MessageKind::query && m.query_id == query_id) return &m;
  }
  return nullptr;
}

std::vector<std::string> check_transcript(const Transcript& t, bool allow_pending) {
  std::vector<std::string> problems;
  const auto& msgs = t.messages;
  if (msgs.empty()) return problems;

  if (msgs[0].kind != MessageKind::description || msgs[0].role != Role::analyst) {
    problems.push_back("message 0 must be the analyst description");
  }
  std::size_t i = 1;
  if (i < msgs.size() && msgs[i].kind == MessageKind::acknowledgment) {
    if (msgs[i].role != Role::assistant) problems.push_back("acknowledgment must be from assistant");
    ++i;
  }

  std::set<std::string> seen;
  for (; i < msgs.size(); i += 2) {
    const Message& q = msgs[i];
    const std::string where = "message " + std::to_string(i);
    if (q.kind != MessageKind::query || q.role != Role::analyst) {
      problems.push_back(where + " must be an analyst query");
      break;
    }
    if (!q.query_id || q.query_id->empty()) {
      problems.push_back(where + " has no query_id");
      break;
    }
    if (!seen.insert(*q.query_id).second) problems.push_back("duplicate query '" + *q.query_id + "'");
    if (i + 1 >= msgs.size()) {
      if (!allow_pending) problems.push_back("query '" + *q.query_id + "' has no response");
      break;
    }
    const Message& r = msgs[i + 1];
    if (r.kind != MessageKind::response || r.role != Role::assistant) {
      problems.push_back("message " + std::to_string(i + 1) + " must be an assistant response");
      break;
    }
    if (r.query_id != q.query_id) {
      problems.push_back("response at message " + std::to_string(i + 1) +
                         " does not match query '" + *q.query_id + "'");
    }
  }
  for (std::size_t k = 0; k < msgs.size(); ++k) {
    const bool needs_id = msgs[k].kind == MessageKind::query || msgs[k].kind == MessageKind::response;
    if (needs_id != msgs[k].query_id.has_value()) {
      problems.push_back("message " + std::to_string(k) +
                         (needs_id ? " is missing query_id" : " must not carry query_id"));
    }
  }
  return problems;
}

std::string to_jsonl(const Transcript& t) {
  std::string out;
  for (std::size_t i = 0; i < t.messages.size(); ++i) {
    const Message& m = t.messages[i];
    json j = {{"role", to_string(m.role)},
              {"kind", to_string(m.kind)},
              {"text", m.text},
              {"timestamp", m.timestamp}};
    if (i == 0) {
      j["session_id"] = t.session_id;
      j["model_fingerprint"] = t.model_fingerprint;
    }
    if (m.query_id) j["query_id"] = *m.query_id;
    if (m.kind == MessageKind::query) j["guideword"] = m.guideword ? json(*m.guideword) : json(nullptr);
    if (m.kind == MessageKind::response) j["refusal"] = m.refusal;
    out += j.dump();
    out += '\n';
  }
  return out;
}

Transcript parse_jsonl(std::string_view text) {
  Transcript t;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    if (nl == std::string_view::npos) {
      throw Error(ErrorCode::malformed_document,
                  "transcript line " + std::to_string(line_no + 1) + " is not newline-terminated");
    }
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl + 1);
    ++line_no;
    if (line.empty()) continue;

    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::malformed_document,
                  "transcript line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      Message m;
      m.role = role_from_string(j.at("role").get<std::string>());
      m.kind = kind_from_string(j.at("kind").get<std::string>());
      m.text = j.at("text").get<std::string>();
      m.timestamp = j.value("timestamp", "");
      if (j.contains("query_id")) m.query_id = j["query_id"].get<std::string>();
      if (auto it = j.find("guideword"); it != j.end() && !it->is_null()) {
        m.guideword = it->get<std::string>();
      }
      m.refusal = j.value("refusal", false);
      if (t.messages.empty()) {
        t.session_id = j.value("session_id", "");
        t.model_fingerprint = j.value("model_fingerprint", "");
      }
      t.messages.push_back(std::move(m));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::malformed_document,
                  "transcript line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return t;
}

Transcript load_transcript(const std::filesystem::path& path) {
  return parse_jsonl(read_file(path));
}

Transcript without_timestamps(Transcript t) {
  for (auto& m : t.messages) m.timestamp.clear();
  return t;
}

void require_append_only(std::string_view previous, std::string_view next) {
  if (next.size() < previous.size() || next.substr(0, previous.size()) != previous) {
    throw Error(ErrorCode::conflict, "transcripts are append-only; refusing to rewrite existing messages");
  }
}

void FileTranscriptSink::commit(const Transcript& t) {
  const std::string next = to_jsonl(t);
  if (std::filesystem::exists(path_)) require_append_only(read_file(path_), next);
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  atomic_write_file(path_, next, hook_);
}

}  // namespace coha
