#include "coha/providers.hpp"

#include "coha/error.hpp"

namespace coha {

void ProviderConfig::check() const {
  if (!(timeout_seconds > 0)) throw Error(ErrorCode::invalid_argument, "provider timeout must be > 0");
  if (max_retries < 0) throw Error(ErrorCode::invalid_argument, "max_retries must be >= 0");
}

std::optional<Completion> EchoProvider::acknowledge(std::span<const Message> history) {
  if (history.empty()) throw Error(ErrorCode::protocol, "acknowledge needs the description message");
  return Completion{history.front().text, false};
}

Completion EchoProvider::complete(std::span<const Message> history) {
  if (history.empty() || history.back().role != Role::analyst) {
    throw Error(ErrorCode::protocol, "echo provider expects an analyst message last");
  }
  return {history.back().text, false};
}

ReplayProvider::ReplayProvider(Transcript recording)
    : recording_(std::move(recording)), consumed_(recording_.messages.size(), false) {}

std::unique_ptr<ReplayProvider> ReplayProvider::from_file(const std::filesystem::path& fixture) {
  if (fixture.empty()) throw Error(ErrorCode::invalid_argument, "replay provider needs a fixture path");
  return std::make_unique<ReplayProvider>(load_transcript(fixture));
}

std::string ReplayProvider::fingerprint(const std::string&) const {
  return "replay:" + (recording_.model_fingerprint.empty() ? std::string("unknown")
                                                           : recording_.model_fingerprint);
}

std::optional<Completion> ReplayProvider::acknowledge(std::span<const Message> history) {
  const auto& rec = recording_.messages;
  if (history.empty() || rec.empty()) return std::nullopt;
  if (rec[0].text != history.front().text) {
    throw Error(ErrorCode::fixture_exhausted,
                "replay fixture was recorded for a different system description");
  }
  if (rec.size() > 1 && rec[1].kind == MessageKind::acknowledgment) {
    return Completion{rec[1].text, false};
  }
  return std::nullopt;
}

Completion ReplayProvider::complete(std::span<const Message> history) {
  if (history.empty() || history.back().kind != MessageKind::query) {
    throw Error(ErrorCode::protocol, "replay provider expects a query message last");
  }
  const std::string& text = history.back().text;
  const auto& rec = recording_.messages;
  for (std::size_t i = 0; i + 1 < rec.size(); ++i) {
    if (consumed_[i] || rec[i].kind != MessageKind::query || rec[i].text != text) continue;
    const Message& reply = rec[i + 1];
    if (reply.kind != MessageKind::response) continue;
    consumed_[i] = true;
    return {reply.text, reply.refusal};
  }
  throw Error(ErrorCode::fixture_exhausted, "fixture exhausted: no recorded response for query",
              {history.back().query_id.value_or("")});
}

std::unique_ptr<ChatProvider> make_provider(const ProviderConfig& config) {
  config.check();
  if (config.provider_name == "echo") return std::make_unique<EchoProvider>();
  if (config.provider_name == "replay") return ReplayProvider::from_file(config.fixture);
  if (config.provider_name == "live") return std::make_unique<HttpChatProvider>(config);
  throw Error(ErrorCode::invalid_argument, "unknown provider '" + config.provider_name + "'");
}

}  // namespace coha
