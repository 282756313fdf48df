#include "etva/llm_backend.hpp"

#include <httplib.h>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <optional>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <thread>

#include "etva/text.hpp"

namespace etva::llm {

std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

std::string ChatMessage::joined_text() const {
  std::string out;
  for (const auto& p : parts) {
    if (const auto* s = std::get_if<std::string>(&p)) {
      if (!out.empty()) out.push_back('\n');
      out += *s;
    }
  }
  return out;
}

std::size_t ChatMessage::image_count() const {
  return static_cast<std::size_t>(
      std::count_if(parts.begin(), parts.end(), [](const ContentPart& p) { return std::holds_alternative<ImagePart>(p); }));
}

void check_request(const CompletionRequest& req) {
  if (req.messages.empty()) throw ArgumentError("completion request has no messages");
  for (const auto& m : req.messages) {
    if (m.parts.empty()) throw ArgumentError("chat message has no content parts");
    if (m.role != Role::User && m.image_count() > 0)
      throw ArgumentError("image parts are only allowed in user messages");
  }
  if (req.max_tokens <= 0) throw ArgumentError("max_tokens must be positive");
  if (req.temperature < 0.0) throw ArgumentError("temperature must be nonnegative");
}

namespace {

std::string digest_hex(const void* data, std::size_t len) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int md_len = 0;
  if (EVP_Digest(data, len, md, &md_len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(md_len * 2);
  for (unsigned int i = 0; i < md_len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

nlohmann::json canonical_messages(const CompletionRequest& req) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : req.messages) {
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& p : m.parts) {
      if (const auto* s = std::get_if<std::string>(&p)) {
        parts.push_back({{"type", "text"}, {"text", *s}});
      } else {
        const auto& img = std::get<ImagePart>(p);
        parts.push_back({{"type", "image"}, {"media_type", img.media_type}, {"sha256", sha256_hex(img.bytes)}});
      }
    }
    msgs.push_back({{"role", to_string(m.role)}, {"parts", parts}});
  }
  return msgs;
}

}  // namespace

std::string sha256_hex(std::string_view data) { return digest_hex(data.data(), data.size()); }
std::string sha256_hex(const std::vector<std::uint8_t>& data) { return digest_hex(data.data(), data.size()); }

std::string base64_encode(const std::vector<std::uint8_t>& data) {
  std::string out(4 * ((data.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(), static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string fingerprint(const CompletionRequest& req) {
  const nlohmann::json payload = {{"model", req.model_name},
                                  {"messages", canonical_messages(req)},
                                  {"temperature", req.temperature},
                                  {"max_tokens", req.max_tokens}};
  return sha256_hex(payload.dump());
}

std::string request_digest(const CompletionRequest& req) {
  const nlohmann::json payload = {{"model", req.model_name},
                                  {"messages", canonical_messages(req)},
                                  {"temperature", req.temperature},
                                  {"max_tokens", req.max_tokens},
                                  {"response_hint", req.response_hint == ResponseHint::JsonObject ? "json_object" : "free_text"}};
  return sha256_hex(payload.dump());
}

nlohmann::json to_wire(const CompletionRequest& req) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : req.messages) {
    const bool plain = m.parts.size() == 1 && std::holds_alternative<std::string>(m.parts.front());
    if (plain) {
      msgs.push_back({{"role", to_string(m.role)}, {"content", std::get<std::string>(m.parts.front())}});
      continue;
    }
    nlohmann::json content = nlohmann::json::array();
    for (const auto& p : m.parts) {
      if (const auto* s = std::get_if<std::string>(&p)) {
        content.push_back({{"type", "text"}, {"text", *s}});
      } else {
        const auto& img = std::get<ImagePart>(p);
        content.push_back({{"type", "image_url"},
                           {"image_url", {{"url", "data:" + img.media_type + ";base64," + base64_encode(img.bytes)}}}});
      }
    }
    msgs.push_back({{"role", to_string(m.role)}, {"content", content}});
  }
  nlohmann::json body = {{"model", req.model_name},
                         {"messages", msgs},
                         {"max_tokens", req.max_tokens},
                         {"temperature", req.temperature}};
  if (req.response_hint == ResponseHint::JsonObject) body["response_format"] = {{"type", "json_object"}};
  return body;
}

// ---------------------------------------------------------------- scripted

ScriptedBackend ScriptedBackend::from_json(const nlohmann::json& doc) {
  try {
    std::map<std::string, std::string> fps;
    if (doc.contains("fingerprints"))
      for (const auto& [fp, text] : doc.at("fingerprints").items()) fps.emplace(fp, text.get<std::string>());
    std::vector<Rule> rules;
    if (doc.contains("rules")) {
      for (const auto& r : doc.at("rules")) {
        Rule rule;
        rule.purpose = r.value("purpose", std::string{});
        if (r.contains("contains")) rule.contains = r.at("contains").get<std::vector<std::string>>();
        rule.response = r.at("response").get<std::string>();
        rules.push_back(std::move(rule));
      }
    }
    return ScriptedBackend(std::move(fps), std::move(rules));
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("malformed scripted table: ") + ex.what(), doc.dump());
  }
}

ScriptedBackend ScriptedBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read scripted table " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& ex) {
    throw SchemaError(std::string("scripted table is not JSON: ") + ex.what(), path.string());
  }
}

std::string ScriptedBackend::complete(const CompletionRequest& req) {
  check_request(req);
  const std::string fp = fingerprint(req);
  if (auto it = by_fingerprint_.find(fp); it != by_fingerprint_.end()) return it->second;

  std::string haystack;
  for (const auto& m : req.messages) haystack += m.joined_text() + "\n";
  for (const auto& rule : rules_) {
    if (!rule.purpose.empty() && req.purpose != rule.purpose && !req.purpose.starts_with(rule.purpose + ":"))
      continue;
    const bool all = std::all_of(rule.contains.begin(), rule.contains.end(),
                                 [&](const std::string& needle) { return haystack.find(needle) != std::string::npos; });
    if (all) return rule.response;
  }
  throw CassetteMissError(fp);
}

// ---------------------------------------------------------------- recording

std::string RecordingBackend::complete(const CompletionRequest& req) {
  {
    std::lock_guard lock(mu_);
    log_.push_back(req);
  }
  return inner_.complete(req);
}

std::vector<CompletionRequest> RecordingBackend::requests() const {
  std::lock_guard lock(mu_);
  return log_;
}

void RecordingBackend::clear() {
  std::lock_guard lock(mu_);
  log_.clear();
}

// ---------------------------------------------------------------- replay

ReplayBackend::ReplayBackend(std::filesystem::path cassette, Backend* live) : path_(std::move(cassette)), live_(live) {
  std::ifstream in(path_);
  if (!in) {
    if (live_ == nullptr) throw IoError("cannot read cassette " + path_.string());
    return;  // recording into a fresh cassette
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      responses_.emplace(j.at("fingerprint").get<std::string>(), j.at("response_text").get<std::string>());
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(std::string("malformed cassette line in ") + path_.string() + ": " + ex.what(), lineno);
    }
  }
}

std::size_t ReplayBackend::size() const {
  std::lock_guard lock(mu_);
  return responses_.size();
}

std::string ReplayBackend::complete(const CompletionRequest& req) {
  check_request(req);
  const std::string fp = fingerprint(req);
  {
    std::lock_guard lock(mu_);
    if (auto it = responses_.find(fp); it != responses_.end()) return it->second;
  }
  if (live_ == nullptr) throw CassetteMissError(fp);

  std::string response = live_->complete(req);
  std::lock_guard lock(mu_);
  auto [it, inserted] = responses_.emplace(fp, response);
  if (!inserted) return it->second;  // another worker recorded it first
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("cannot append to cassette " + path_.string());
  char stamp[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  const nlohmann::json line = {{"fingerprint", fp},
                               {"request_digest", request_digest(req)},
                               {"response_text", response},
                               {"timestamp", stamp}};
  out << line.dump() << '\n';
  return response;
}

// ---------------------------------------------------------------- http

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ArgumentError("endpoint_url needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  std::string host = path_start == std::string::npos ? url : url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? std::string{} : url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {host, path + "/chat/completions"};
}

std::string content_text(const nlohmann::json& content) {
  if (content.is_string()) return content.get<std::string>();
  std::string out;
  if (content.is_array())
    for (const auto& part : content)
      if (part.value("type", "") == "text") out += part.value("text", "");
  return out;
}

class InFlightSlot {
 public:
  explicit InFlightSlot(std::counting_semaphore<>& s) : s_(s) { s_.acquire(); }
  ~InFlightSlot() { s_.release(); }
  InFlightSlot(const InFlightSlot&) = delete;
  InFlightSlot& operator=(const InFlightSlot&) = delete;

 private:
  std::counting_semaphore<>& s_;
};

}  // namespace

HttpBackend::HttpBackend(HttpConfig config)
    : config_(std::move(config)), in_flight_(std::max(1, config_.max_in_flight)) {
  if (config_.max_attempts < 1) throw ArgumentError("max_attempts must be at least 1");
  std::tie(scheme_host_, path_) = split_url(config_.endpoint_url);
}

std::string HttpBackend::complete(const CompletionRequest& req) {
  check_request(req);
  const std::string body = to_wire(req).dump();
  httplib::Headers headers;
  if (const char* token = std::getenv(config_.api_key_env.c_str()); token && *token)
    headers.emplace("Authorization", std::string("Bearer ") + token);

  InFlightSlot slot(in_flight_);
  auto backoff = config_.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    httplib::Client client(scheme_host_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    auto res = client.Post(path_, headers, body, "application/json");

    if (res && res->status == 200) {
      last_attempts_ = attempt;
      if (attempt > 1) spdlog::info("completion succeeded after {} attempts", attempt);
      try {
        const auto j = nlohmann::json::parse(res->body);
        return content_text(j.at("choices").at(0).at("message").at("content"));
      } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(std::string("unexpected completion body: ") + ex.what(), res->body);
      }
    }
    if (res && (res->status == 401 || res->status == 403)) {
      last_attempts_ = attempt;
      throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
    }
    const bool retryable = !res || res->status == 429 || res->status >= 500;
    last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
    if (!retryable) {
      last_attempts_ = attempt;
      throw TransportError("completion failed: " + last_error + ": " + res->body);
    }
    spdlog::warn("completion attempt {}/{} failed: {}", attempt, config_.max_attempts, last_error);
    if (attempt < config_.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(backoff.count()) * config_.backoff_factor));
    }
  }
  last_attempts_ = config_.max_attempts;
  throw TransportError("endpoint unreachable after " + std::to_string(config_.max_attempts) + " attempts: " + last_error);
}

// ---------------------------------------------------------------- json extraction

namespace {

// End (exclusive) of the bracketed value starting at `start`, or npos.
std::size_t match_value(std::string_view s, std::size_t start) {
  std::vector<char> stack;
  bool in_string = false, escaped = false;
  for (std::size_t i = start; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{' || c == '[') stack.push_back(c == '{' ? '}' : ']');
    else if (c == '}' || c == ']') {
      if (stack.empty() || stack.back() != c) return std::string_view::npos;
      stack.pop_back();
      if (stack.empty()) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::optional<nlohmann::json> first_value(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '{' && s[i] != '[') continue;
    const std::size_t end = match_value(s, i);
    if (end == std::string_view::npos) continue;
    auto parsed = nlohmann::json::parse(s.substr(i, end - i), nullptr, false);
    if (!parsed.is_discarded()) return parsed;
  }
  return std::nullopt;
}

}  // namespace

nlohmann::json extract_json(std::string_view text) {
  const auto fence = text.find("```");
  if (fence != std::string_view::npos) {
    auto body_start = text.find('\n', fence);
    if (body_start != std::string_view::npos) {
      const auto close = text.find("```", body_start);
      const auto body = text.substr(body_start + 1, close == std::string_view::npos ? std::string_view::npos
                                                                                    : close - body_start - 1);
      if (auto v = first_value(body)) return *v;
    }
  }
  if (auto v = first_value(text)) return *v;
  throw SchemaError("no parseable JSON value in model reply", std::string(text));
}

}  // namespace etva::llm
