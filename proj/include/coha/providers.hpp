#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coha/transcript.hpp"

namespace coha {

struct ProviderConfig {
  std::string provider_name = "echo";  // live | replay | echo
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model_identifier = "gpt-3.5-turbo";
  std::string auth_env_var = "OPENAI_API_KEY";
  double timeout_seconds = 60.0;
  int max_retries = 2;
  // Replay only: recorded transcript to serve responses from.
  std::filesystem::path fixture;

  // Throws coha::Error(invalid_argument) on timeout <= 0 or max_retries < 0.
  void check() const;
};

struct Completion {
  std::string text;
  bool refusal = false;
};

// A chat backend. Implementations raise coha::Error with code `transport`
// for retryable failures (nothing was received) and `authentication`,
// `fixture_exhausted` or `protocol` for the rest.
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;

  virtual std::string name() const = 0;
  // provider + model identifier + date
  virtual std::string fingerprint(const std::string& date) const = 0;

  // Reply to the description message, or nullopt when the provider does not
  // acknowledge it.
  virtual std::optional<Completion> acknowledge(std::span<const Message> history) = 0;

  // First completion for the conversation whose last message is the query.
  virtual Completion complete(std::span<const Message> history) = 0;
};

// Replies with the last analyst message verbatim.
class EchoProvider final : public ChatProvider {
 public:
  std::string name() const override { return "echo"; }
  std::string fingerprint(const std::string& date) const override { return "echo:echo:" + date; }
  std::optional<Completion> acknowledge(std::span<const Message> history) override;
  Completion complete(std::span<const Message> history) override;
};

// Serves responses from a recorded transcript, matched by query text in
// recording order.
class ReplayProvider final : public ChatProvider {
 public:
  explicit ReplayProvider(Transcript recording);
  static std::unique_ptr<ReplayProvider> from_file(const std::filesystem::path& fixture);

  std::string name() const override { return "replay"; }
  std::string fingerprint(const std::string& date) const override;
  std::optional<Completion> acknowledge(std::span<const Message> history) override;
  Completion complete(std::span<const Message> history) override;

 private:
  Transcript recording_;
  std::vector<bool> consumed_;
};

// OpenAI-compatible chat-completions endpoint. The bearer token is read from
// the environment at request time and never persisted.
class HttpChatProvider final : public ChatProvider {
 public:
  explicit HttpChatProvider(ProviderConfig config);

  std::string name() const override { return "live"; }
  std::string fingerprint(const std::string& date) const override;
  std::optional<Completion> acknowledge(std::span<const Message> history) override;
  Completion complete(std::span<const Message> history) override;

 private:
  ProviderConfig config_;
};

std::unique_ptr<ChatProvider> make_provider(const ProviderConfig& config);

}  // namespace coha
