#include "coha/service.hpp"

#include <httplib.h>

#include <cctype>
#include <cstdio>
#include <random>

#include "coha/description.hpp"
#include "coha/error.hpp"
#include "coha/queries.hpp"
#include "coha/workflow.hpp"

namespace coha {

using nlohmann::json;

namespace {

ApiResponse json_response(int status, const json& body) {
  return {status, "application/json", body.dump(2) + "\n"};
}

ApiResponse error_response(const Error& e) {
  return json_response(http_status(e.code()), {{"code", std::string(to_string(e.code()))},
                                               {"message", e.what()},
                                               {"details", e.details()}});
}

json agreement_json(const AgreementResult& r) {
  return {{"scope", r.scope},       {"kappa", r.kappa},   {"p_o", r.observed},
          {"p_e", r.expected},      {"tokens", r.tokens}, {"degenerate", r.degenerate}};
}

json message_json(const Message& m) {
  json j = {{"role", std::string(to_string(m.role))},
            {"kind", std::string(to_string(m.kind))},
            {"text", m.text},
            {"timestamp", m.timestamp},
            {"query_id", m.query_id ? json(*m.query_id) : json(nullptr)}};
  if (m.kind == MessageKind::query) j["guideword"] = m.guideword ? json(*m.guideword) : json(nullptr);
  if (m.kind == MessageKind::response) j["refusal"] = m.refusal;
  return j;
}

std::vector<std::string> split_path(std::string_view path) {
  if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    if (path[i] == '/') {
      ++i;
      continue;
    }
    const std::size_t j = path.find('/', i);
    parts.emplace_back(path.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i));
    if (j == std::string_view::npos) break;
    i = j;
  }
  return parts;
}

std::string random_token() {
  std::random_device rd;
  std::string out;
  char buf[3];
  for (int i = 0; i < 24; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", rd() & 0xff);
    out += buf;
  }
  return out;
}

json parse_body(const std::string& body) {
  try {
    json j = json::parse(body);
    if (!j.is_object()) throw Error(ErrorCode::malformed_document, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_document, std::string("malformed request body: ") + e.what());
  }
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::malformed_document:
    case ErrorCode::invalid_model:
    case ErrorCode::invalid_argument: return 400;
    case ErrorCode::unauthorized: return 401;
    case ErrorCode::blinded: return 403;
    case ErrorCode::not_found:
    case ErrorCode::unknown_id: return 404;
    case ErrorCode::protocol:
    case ErrorCode::duplicate_query:
    case ErrorCode::fixture_exhausted:
    case ErrorCode::session_busy:
    case ErrorCode::conflict:
    case ErrorCode::lock_held: return 409;
    case ErrorCode::coverage_gap:
    case ErrorCode::token_mismatch: return 422;
    case ErrorCode::transport:
    case ErrorCode::authentication: return 502;
    case ErrorCode::store_corrupt:
    case ErrorCode::schema_too_new:
    case ErrorCode::io: return 500;
  }
  return 500;
}

struct ReviewService::SessionSlot {
  std::mutex busy;
  std::unique_ptr<ChatProvider> provider;
  std::unique_ptr<ProjectTranscriptSink> sink;
  std::optional<LlmSession> session;
};

struct ReviewService::HttpServer {
  httplib::Server server;
};

ReviewService::ReviewService(Project project, ServiceOptions options)
    : project_(std::move(project)), options_(std::move(options)) {
  if (!project_.writable()) {
    throw Error(ErrorCode::lock_held, "the review service needs the project writer lock");
  }
  if (!options_.provider_factory) {
    options_.provider_factory = [config = options_.provider](const SessionEntry&,
                                                             const Transcript& t)
        -> std::unique_ptr<ChatProvider> {
      if (config.provider_name == "replay" && config.fixture.empty()) {
        return std::make_unique<ReplayProvider>(t);
      }
      return make_provider(config);
    };
  }
}

ReviewService::~ReviewService() { stop(); }

std::string ReviewService::issue_token(const std::string& reviewer_id) {
  const auto reviewers = project_.manifest().reviewers;
  if (std::find(reviewers.begin(), reviewers.end(), reviewer_id) == reviewers.end()) {
    throw Error(ErrorCode::unauthorized, "'" + reviewer_id + "' is not a registered reviewer");
  }
  std::string token = random_token();
  std::lock_guard lock(tokens_mutex_);
  tokens_[token] = {reviewer_id, options_.now() + options_.token_ttl};
  return token;
}

std::string ReviewService::authenticate(const ApiRequest& request) {
  const auto it = request.headers.find("authorization");
  constexpr std::string_view kBearer = "Bearer ";
  if (it == request.headers.end() || !it->second.starts_with(kBearer)) {
    throw Error(ErrorCode::unauthorized, "missing bearer token");
  }
  const std::string token = it->second.substr(kBearer.size());
  std::lock_guard lock(tokens_mutex_);
  const auto t = tokens_.find(token);
  if (t == tokens_.end()) throw Error(ErrorCode::unauthorized, "unknown token");
  if (options_.now() >= t->second.expiry) {
    tokens_.erase(t);
    throw Error(ErrorCode::unauthorized, "token expired");
  }
  return t->second.reviewer_id;
}

ApiResponse ReviewService::handle(const ApiRequest& request) {
  try {
    const std::string reviewer = authenticate(request);
    const auto key = request.headers.find("idempotency-key");
    if (request.method != "POST" || key == request.headers.end()) return route(request, reviewer);

    const std::string cache_key = reviewer + "\n" + request.path + "\n" + key->second;
    {
      std::lock_guard lock(idempotency_mutex_);
      if (auto hit = idempotency_.find(cache_key); hit != idempotency_.end()) return hit->second;
    }
    ApiResponse response;
    try {
      response = route(request, reviewer);
    } catch (const Error& e) {
      response = error_response(e);
    }
    // Busy sessions and server faults are worth retrying for real.
    if (response.status != 409 || response.body.find("session_busy") == std::string::npos) {
      if (response.status < 500) {
        std::lock_guard lock(idempotency_mutex_);
        idempotency_.emplace(cache_key, response);
      }
    }
    return response;
  } catch (const Error& e) {
    return error_response(e);
  } catch (const std::exception& e) {
    return json_response(500, {{"code", "internal"}, {"message", e.what()}, {"details", json::array()}});
  }
}

ApiResponse ReviewService::route(const ApiRequest& request, const std::string& reviewer) {
  const auto parts = split_path(request.path);
  if (parts.size() < 2 || parts[0] != "api") throw Error(ErrorCode::not_found, "no such endpoint");
  const std::string& what = parts[1];
  const bool get = request.method == "GET";
  const bool post = request.method == "POST";

  if (get && parts.size() == 2 && what == "model") {
    std::shared_lock lock(state_mutex_);
    json out = json::array();
    for (const auto& [file, model] : project_models(project_)) {
      out.push_back({{"file", file}, {"model", to_json(model)}});
    }
    return json_response(200, out);
  }
  if (get && parts.size() == 2 && what == "description") {
    std::shared_lock lock(state_mutex_);
    json out = json::array();
    for (const auto& [file, model] : project_models(project_)) {
      const DescriptionText d = render_description(model);
      out.push_back({{"file", file},
                     {"parts", {d.part1_elements, d.part2_relationships, d.part3_assumptions,
                                d.part4_hazards}},
                     {"full_text", d.full_text}});
    }
    return json_response(200, out);
  }
  if (get && parts.size() == 2 && what == "queries") {
    std::shared_lock lock(state_mutex_);
    const QueryOptions options = project_.query_options();
    json out = json::array();
    for (const auto& [file, model] : project_models(project_)) {
      for (const auto& q : generate_queries(model, options)) out.push_back(to_json(q));
    }
    return json_response(200, out);
  }
  if (get && parts.size() == 3 && what == "responses") {
    std::shared_lock lock(state_mutex_);
    const auto r = find_response(project_, parts[2]);
    if (!r) throw Error(ErrorCode::not_found, "unknown query '" + parts[2] + "'", {parts[2]});
    json tokens = json::array();
    for (const auto& t : tokenize(r->text).tokens) tokens.push_back(t.text);
    return json_response(200, {{"query_id", r->query_id},
                               {"session_id", r->session_id},
                               {"model", r->model_file},
                               {"group", r->group_label},
                               {"guideword", r->guideword ? json(*r->guideword) : json(nullptr)},
                               {"query", r->query_text},
                               {"text", r->text},
                               {"refusal", r->refusal},
                               {"tokens", tokens}});
  }
  if (post && parts.size() == 4 && what == "sessions" && parts[3] == "followup") {
    return followup(parts[2], request);
  }
  if (post && parts.size() == 2 && what == "codings") return post_coding(request, reviewer);
  if (get && parts.size() == 3 && what == "codings") return get_codings(parts[2], reviewer);
  if (post && parts.size() == 3 && what == "reconcile") {
    std::unique_lock lock(state_mutex_);
    return json_response(200, to_json(reconcile_query(project_, parts[2])));
  }
  if (get && parts.size() == 2 && what == "agreement") {
    std::shared_lock lock(state_mutex_);
    const KappaListing k = kappa_listing(project_);
    json per = json::array();
    for (const auto& r : k.per_response) per.push_back(agreement_json(r));
    return json_response(200, {{"per_response", per},
                               {"overall", k.overall ? agreement_json(*k.overall) : json(nullptr)}});
  }
  if (get && parts.size() == 2 && what == "stats") {
    std::shared_lock lock(state_mutex_);
    return {200, "application/json", stats_text(project_, options_.alpha)};
  }
  if (get && parts.size() == 2 && what == "report.md") {
    std::shared_lock lock(state_mutex_);
    return {200, "text/markdown; charset=utf-8", report_markdown(project_, options_.alpha)};
  }
  throw Error(ErrorCode::not_found, "no such endpoint: " + request.method + " " + request.path);
}

ApiResponse ReviewService::post_coding(const ApiRequest& request, const std::string& reviewer) {
  const json body = parse_body(request.body);
  std::string query_id, notes;
  Phase phase = Phase::independent;
  bool finalize = true;
  std::vector<Span> spans;
  try {
    query_id = body.at("query_id").get<std::string>();
    if (body.contains("reviewer_id") && body["reviewer_id"] != reviewer) {
      throw Error(ErrorCode::unauthorized, "codings can only be submitted as the signed-in reviewer");
    }
    phase = phase_from_string(body.value("phase", "independent"));
    notes = body.value("notes", "");
    finalize = body.value("finalize", true);
    spans = spans_from_json(body.at("spans"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_document, std::string("malformed coding: ") + e.what());
  }

  std::unique_lock lock(state_mutex_);
  const auto response = find_response(project_, query_id);
  if (!response) throw Error(ErrorCode::not_found, "unknown query '" + query_id + "'", {query_id});
  const std::size_t tokens = word_count(response->text);

  if (!finalize) {
    // Draft check only: nothing is stored until the coding covers every token.
    json uncovered = json::array();
    try {
      coding_from_spans(reviewer, query_id, tokens, spans, phase, notes);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::coverage_gap) throw;
      for (const auto& r : uncovered_ranges(tokens, spans)) {
        uncovered.push_back({{"start", r.start}, {"end_exclusive", r.end_exclusive}});
      }
    }
    return json_response(200, {{"stored", false}, {"uncovered", uncovered}});
  }

  const ReviewerCoding coding = coding_from_spans(reviewer, query_id, tokens, spans, phase, notes);

  bool others_independent = false;
  for (const auto& other : project_.manifest().reviewers) {
    if (other != reviewer && load_coding(project_, query_id, other, Phase::independent)) {
      others_independent = true;
    }
  }
  const bool own_independent = load_coding(project_, query_id, reviewer, Phase::independent).has_value();
  if (phase == Phase::independent && own_independent && others_independent) {
    throw Error(ErrorCode::conflict,
                "independent codings are frozen once both reviewers have submitted", {query_id});
  }
  if (phase == Phase::post_discussion && !(own_independent && others_independent)) {
    throw Error(ErrorCode::conflict,
                "post-discussion codings need both independent codings first", {query_id});
  }
  save_coding(project_, coding);
  return json_response(201, to_json(coding));
}

ApiResponse ReviewService::get_codings(const std::string& query_id, const std::string& reviewer) {
  std::shared_lock lock(state_mutex_);
  if (!find_response(project_, query_id)) {
    throw Error(ErrorCode::not_found, "unknown query '" + query_id + "'", {query_id});
  }
  const auto own = load_coding(project_, query_id, reviewer, Phase::independent);
  std::optional<std::string> other;
  for (const auto& r : project_.manifest().reviewers) {
    if (r != reviewer && load_coding(project_, query_id, r, Phase::independent)) {
      other = r;
      break;
    }
  }
  if (!own || !other) {
    throw Error(ErrorCode::blinded, "blinded",
                {"codings are visible once both reviewers have submitted independent codings"});
  }

  json codings = json::array();
  for (const auto& who : {reviewer, *other}) {
    for (Phase p : {Phase::independent, Phase::post_discussion}) {
      if (auto c = load_coding(project_, query_id, who, p)) codings.push_back(to_json(*c));
    }
  }
  const auto independent = coding_pair(project_, query_id, Phase::independent);
  const auto effective = coding_pair(project_, query_id);
  json out = {{"query_id", query_id}, {"codings", codings}};
  out["kappa"] = {{"independent", independent && !independent->first.assignments.empty()
                                      ? agreement_json(kappa(independent->first, independent->second))
                                      : json(nullptr)},
                  {"effective", effective && !effective->first.assignments.empty()
                                    ? agreement_json(kappa(effective->first, effective->second))
                                    : json(nullptr)}};
  return json_response(200, out);
}

ReviewService::SessionSlot& ReviewService::slot_for(const std::string& session_id) {
  std::lock_guard lock(slots_mutex_);
  auto& slot = slots_[session_id];
  if (slot) return *slot;

  const Manifest manifest = project_.manifest();
  const SessionEntry* entry = manifest.find_session(session_id);
  if (!entry) {
    slots_.erase(session_id);
    throw Error(ErrorCode::not_found, "unknown session '" + session_id + "'", {session_id});
  }
  Transcript t = parse_jsonl(project_.read_artifact(ArtifactKind::transcript, session_id));
  auto fresh = std::make_unique<SessionSlot>();
  fresh->provider = options_.provider_factory(*entry, t);
  fresh->sink = std::make_unique<ProjectTranscriptSink>(project_, entry->model);
  SessionOptions so;
  so.session_id = session_id;
  fresh->session.emplace(LlmSession::resume(*fresh->provider, fresh->sink.get(), std::move(t), so));
  slot = std::move(fresh);
  return *slot;
}

ApiResponse ReviewService::followup(const std::string& session_id, const ApiRequest& request) {
  const json body = parse_body(request.body);
  if (!body.contains("text") || !body["text"].is_string() || body["text"].get<std::string>().empty()) {
    throw Error(ErrorCode::invalid_argument, "follow-up needs non-empty text");
  }
  SessionSlot& slot = slot_for(session_id);
  std::unique_lock busy(slot.busy, std::try_to_lock);
  if (!busy.owns_lock()) throw Error(ErrorCode::session_busy, "session busy", {session_id});

  std::string query_id = body.value("query_id", "");
  if (query_id.empty()) {
    std::size_t n = 1;
    for (const auto& m : slot.session->transcript().messages) {
      if (m.kind == MessageKind::query && !m.guideword) ++n;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "-f%03zu", n);
    query_id = session_id + buf;
  }
  const Message reply = slot.session->ask_followup(query_id, body["text"].get<std::string>());
  return json_response(201, message_json(reply));
}

int ReviewService::bind(const std::string& host, int port) {
  http_ = std::make_unique<HttpServer>();
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r{req.method, req.path, {}, req.body};
    for (const auto& [name, value] : req.headers) {
      std::string lower = name;
      for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      r.headers[lower] = value;
    }
    const ApiResponse out = handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  http_->server.Get(".*", handler);
  http_->server.Post(".*", handler);
  int bound = port;
  if (port == 0) {
    bound = http_->server.bind_to_any_port(host);
  } else if (!http_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) {
    throw Error(ErrorCode::io, "cannot bind " + host + ":" + std::to_string(port) + " (port in use?)");
  }
  return bound;
}

void ReviewService::run() {
  if (!http_) throw Error(ErrorCode::protocol, "run() before bind()");
  http_->server.listen_after_bind();
}

void ReviewService::stop() {
  if (http_) http_->server.stop();
}

}  // namespace coha
