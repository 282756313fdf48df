#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "etva/errors.hpp"

namespace etva::llm {

enum class Role { System, User, Assistant };
std::string_view to_string(Role r) noexcept;

struct ImagePart {
  std::vector<std::uint8_t> bytes;
  std::string media_type;
};

using ContentPart = std::variant<std::string, ImagePart>;

struct ChatMessage {
  Role role = Role::User;
  std::vector<ContentPart> parts;

  static ChatMessage text(Role role, std::string body) { return ChatMessage{role, {std::move(body)}}; }
  /// Concatenated text parts.
  std::string joined_text() const;
  std::size_t image_count() const;
};

enum class ResponseHint { FreeText, JsonObject };

struct CompletionRequest {
  std::vector<ChatMessage> messages;
  std::string model_name;
  int max_tokens = 1024;
  double temperature = 0.0;
  ResponseHint response_hint = ResponseHint::FreeText;
  /// Pipeline stage tag for logs and tests. Not sent on the wire, not fingerprinted.
  std::string purpose;
};

/// Throws ArgumentError if the request breaks a structural rule (no messages,
/// empty message, image outside a user message, non-positive max_tokens,
/// negative temperature).
void check_request(const CompletionRequest& req);

std::string sha256_hex(std::string_view data);
std::string sha256_hex(const std::vector<std::uint8_t>& data);
std::string base64_encode(const std::vector<std::uint8_t>& data);

/// SHA-256 over (model, messages with images reduced to content digests,
/// temperature, max_tokens). Stable across processes and platforms.
std::string fingerprint(const CompletionRequest& req);
/// Digest of the whole request including the response hint.
std::string request_digest(const CompletionRequest& req);

/// OpenAI-compatible chat-completions body; images become data-URI parts.
nlohmann::json to_wire(const CompletionRequest& req);

class Backend {
 public:
  virtual ~Backend() = default;
  /// Returns the assistant text for `req`. Never mutates the request.
  virtual std::string complete(const CompletionRequest& req) = 0;
};

/// Answers from a fixed table: exact fingerprint matches first, then the first
/// rule whose purpose (if set) equals the request's and whose substrings all
/// occur in the request text. A miss throws CassetteMissError.
class ScriptedBackend final : public Backend {
 public:
  struct Rule {
    std::string purpose;
    std::vector<std::string> contains;
    std::string response;
  };

  ScriptedBackend() = default;
  ScriptedBackend(std::map<std::string, std::string> by_fingerprint, std::vector<Rule> rules)
      : by_fingerprint_(std::move(by_fingerprint)), rules_(std::move(rules)) {}

  /// {"fingerprints": {fp: text}, "rules": [{"purpose", "contains": [..], "response"}]}
  static ScriptedBackend from_json(const nlohmann::json& doc);
  static ScriptedBackend load(const std::filesystem::path& path);

  void add_rule(Rule rule) { rules_.push_back(std::move(rule)); }
  void add_fingerprint(std::string fp, std::string response) { by_fingerprint_[std::move(fp)] = std::move(response); }

  std::string complete(const CompletionRequest& req) override;

 private:
  std::map<std::string, std::string> by_fingerprint_;
  std::vector<Rule> rules_;
};

/// Pass-through that keeps a copy of every request, in call order.
class RecordingBackend final : public Backend {
 public:
  explicit RecordingBackend(Backend& inner) : inner_(inner) {}
  std::string complete(const CompletionRequest& req) override;
  std::vector<CompletionRequest> requests() const;
  void clear();

 private:
  Backend& inner_;
  mutable std::mutex mu_;
  std::vector<CompletionRequest> log_;
};

/// JSONL cassette {fingerprint, request_digest, response_text, timestamp}.
/// Without a live backend it only replays and a miss is an error; with one it
/// records misses (appending one line per exchange) and replays hits.
class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(std::filesystem::path cassette, Backend* live = nullptr);
  std::string complete(const CompletionRequest& req) override;
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  Backend* live_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::string> responses_;
};

struct HttpConfig {
  /// Base URL, e.g. "http://localhost:8000/v1"; "/chat/completions" is appended.
  std::string endpoint_url;
  /// Name of the environment variable holding the bearer token (may be unset).
  std::string api_key_env = "OPENAI_API_KEY";
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_factor = 2.0;
  int max_in_flight = 4;
  std::chrono::seconds timeout{120};
};

/// Live OpenAI-compatible client. Retries connection failures, 429 and 5xx
/// with exponential backoff up to `max_attempts`; 401/403 raise AuthError.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpConfig config);
  std::string complete(const CompletionRequest& req) override;
  /// Attempts spent on the most recent completed call.
  int last_attempts() const noexcept { return last_attempts_.load(); }

 private:
  HttpConfig config_;
  std::string scheme_host_;
  std::string path_;
  std::counting_semaphore<> in_flight_;
  std::atomic<int> last_attempts_{0};
};

/// Pulls the first complete JSON value out of model text: strips code fences
/// and surrounding prose. Throws SchemaError carrying the raw text.
nlohmann::json extract_json(std::string_view text);

/// Runs `req`, parses with `parse` (which throws SchemaError on bad output),
/// and on failure re-prompts once with the error appended. A second failure
/// propagates the SchemaError.
template <class Parse>
auto complete_with_repair(Backend& backend, const CompletionRequest& req, Parse&& parse)
    -> decltype(parse(std::string{})) {
  std::string first = backend.complete(req);
  try {
    return parse(first);
  } catch (const SchemaError& err) {
    CompletionRequest retry = req;
    retry.messages.push_back(ChatMessage::text(Role::Assistant, first));
    retry.messages.push_back(ChatMessage::text(
        Role::User, std::string("Your previous reply could not be used: ") + err.what() +
                        "\nReply again, following the required output format exactly."));
    retry.purpose = req.purpose + ":repair";
    return parse(backend.complete(retry));
  }
}

}  // namespace etva::llm
