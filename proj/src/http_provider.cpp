#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "coha/error.hpp"
#include "coha/providers.hpp"

namespace coha {

using nlohmann::json;

namespace {

struct Endpoint {
  std::string scheme_host_port;
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::invalid_argument, "endpoint must be an absolute URL: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

json to_chat_messages(std::span<const Message> history) {
  json out = json::array();
  for (const auto& m : history) {
    out.push_back({{"role", m.role == Role::analyst ? "user" : "assistant"}, {"content", m.text}});
  }
  return out;
}

}  // namespace

HttpChatProvider::HttpChatProvider(ProviderConfig config) : config_(std::move(config)) {
  config_.check();
  split_endpoint(config_.endpoint);
}

std::string HttpChatProvider::fingerprint(const std::string& date) const {
  return "live:" + config_.model_identifier + ":" + date;
}

std::optional<Completion> HttpChatProvider::acknowledge(std::span<const Message> history) {
  return complete(history);
}

Completion HttpChatProvider::complete(std::span<const Message> history) {
  const char* token = std::getenv(config_.auth_env_var.c_str());
  if (token == nullptr || *token == '\0') {
    throw Error(ErrorCode::authentication,
                "no API token in environment variable " + config_.auth_env_var);
  }

  const Endpoint ep = split_endpoint(config_.endpoint);
  httplib::Client client(ep.scheme_host_port);
  const auto secs = static_cast<time_t>(config_.timeout_seconds);
  const auto usecs = static_cast<time_t>((config_.timeout_seconds - secs) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  client.set_bearer_token_auth(token);

  const json body = {{"model", config_.model_identifier}, {"messages", to_chat_messages(history)}};
  auto res = client.Post(ep.path, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::transport, "request to " + config_.endpoint + " failed: " +
                                          httplib::to_string(res.error()));
  }
  if (res->status == 401 || res->status == 403) {
    throw Error(ErrorCode::authentication,
                "provider rejected credentials (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status == 429 || res->status >= 500) {
    throw Error(ErrorCode::transport, "provider unavailable (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status != 200) {
    throw Error(ErrorCode::protocol, "provider returned HTTP " + std::to_string(res->status) + ": " +
                                         res->body.substr(0, 200));
  }

  try {
    const json reply = json::parse(res->body);
    const json& choice = reply.at("choices").at(0);
    const json& message = choice.at("message");
    Completion c;
    if (auto it = message.find("content"); it != message.end() && it->is_string()) c.text = *it;
    if (auto it = message.find("refusal"); it != message.end() && it->is_string()) {
      c.refusal = true;
      if (c.text.empty()) c.text = it->get<std::string>();
    }
    if (choice.value("finish_reason", "") == "content_filter") c.refusal = true;
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::protocol, std::string("unparseable provider reply: ") + e.what());
  }
}

}  // namespace coha
