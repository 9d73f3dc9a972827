#ifndef DIALOGGEN_GATEWAY_HPP
#define DIALOGGEN_GATEWAY_HPP

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#ifndef DIALOGGEN_NO_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

#include "dialoggen/clock.hpp"
#include "dialoggen/errors.hpp"
#include "dialoggen/log.hpp"
#include "dialoggen/strings.hpp"

// Uniform, backend-agnostic access to a chat-completion model. A live HTTP
// backend (OpenAI-style wire format) and a deterministic scripted mock sit
// behind the same complete() call; per-tag mock scripts take precedence over
// the network whenever one is registered.

namespace dialoggen {

using json = nlohmann::json;

// A named prompt body with single-brace `{name}` placeholders, no nesting.
struct PromptTemplate {
  std::string name;
  std::string body;
  std::set<std::string> required_placeholders;

  static bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
  }

  // Scans the body for `{identifier}` markers. Anything else between braces
  // (JSON examples, numbers) is left alone and never treated as a placeholder.
  static PromptTemplate make(std::string name, std::string body) {
    PromptTemplate t;
    t.name = std::move(name);
    t.body = std::move(body);
    std::size_t pos = 0;
    while ((pos = t.body.find('{', pos)) != std::string::npos) {
      std::size_t end = t.body.find('}', pos + 1);
      if (end == std::string::npos) break;
      std::string_view inner(t.body.data() + pos + 1, end - pos - 1);
      if (is_identifier(inner)) {
        t.required_placeholders.emplace(inner);
        pos = end + 1;
      } else {
        ++pos;
      }
    }
    return t;
  }
};

// Substitutes every required placeholder; the rest of the body is untouched.
// Throws MissingPlaceholder when a binding is absent.
inline std::string render_prompt(const PromptTemplate& tmpl,
                                 const std::map<std::string, std::string>& bindings) {
  for (const auto& name : tmpl.required_placeholders)
    if (!bindings.count(name)) throw MissingPlaceholder(name);

  std::string out;
  out.reserve(tmpl.body.size());
  std::size_t pos = 0;
  while (pos < tmpl.body.size()) {
    std::size_t open = tmpl.body.find('{', pos);
    if (open == std::string::npos) {
      out.append(tmpl.body, pos, std::string::npos);
      break;
    }
    out.append(tmpl.body, pos, open - pos);
    std::size_t close = tmpl.body.find('}', open + 1);
    if (close == std::string::npos) {
      out.append(tmpl.body, open, std::string::npos);
      break;
    }
    std::string inner = tmpl.body.substr(open + 1, close - open - 1);
    if (PromptTemplate::is_identifier(inner) && tmpl.required_placeholders.count(inner)) {
      out.append(bindings.at(inner));
      pos = close + 1;
    } else {
      out.push_back('{');
      pos = open + 1;
    }
  }
  return out;
}

// Templates live as one plain-text file per template in a prompts directory;
// the file stem is the template name.
class PromptLibrary {
 public:
  PromptLibrary() = default;

  static PromptLibrary from_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
      throw IOFailure("prompts directory not found: " + dir.string());
    PromptLibrary lib;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      std::ifstream in(entry.path());
      std::ostringstream buf;
      buf << in.rdbuf();
      lib.add(entry.path().stem().string(), buf.str());
    }
    return lib;
  }

  void add(std::string name, std::string body) {
    templates_[name] = PromptTemplate::make(name, std::move(body));
  }

  const PromptTemplate& get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw UnknownTemplate(name);
    return it->second;
  }

  bool contains(const std::string& name) const { return templates_.count(name) > 0; }
  std::size_t size() const { return templates_.size(); }

 private:
  std::map<std::string, PromptTemplate> templates_;
};

struct DecodingParams {
  double temperature = 0.7;
  int max_output_tokens = 1024;
};

struct ChatRequest {
  std::string template_name;
  std::map<std::string, std::string> bindings;
  DecodingParams decoding;
  bool expects_structured = false;
};

struct ChatResponse {
  std::string raw_text;
  std::optional<json> structured_payload;
  int attempt_count = 1;
};

struct BackendConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model_id = "gpt-4o";
  std::string api_key_env_var = "OPENAI_API_KEY";
  int max_retries = 3;          // bounded at 10
  int rate_limit = 60;          // requests per minute, > 0
  double timeout_seconds = 60;

  void validate() const {
    if (max_retries < 0 || max_retries > 10)
      throw ConfigInvalid("backend.max_retries", "must be in [0, 10]");
    if (rate_limit <= 0)
      throw ConfigInvalid("backend.rate_limit", "must be > 0");
    if (!(timeout_seconds > 0))
      throw ConfigInvalid("backend.timeout", "must be > 0");
  }
};

// Sliding-window limiter: at most `per_minute` acquisitions in any 60 s
// window, enforced by sleeping on the injected clock.
class RateLimiter {
 public:
  RateLimiter(int per_minute, std::shared_ptr<Clock> clock)
      : per_minute_(per_minute), clock_(std::move(clock)) {}

  void acquire() {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto window = std::chrono::seconds(60);
    for (;;) {
      auto now = clock_->now();
      while (!dispatched_.empty() && dispatched_.front() + window <= now)
        dispatched_.pop_front();
      if (static_cast<int>(dispatched_.size()) < per_minute_) {
        dispatched_.push_back(now);
        return;
      }
      auto wake = dispatched_.front() + window;
      clock_->sleep_for(std::chrono::duration_cast<Clock::duration>(wake - now));
    }
  }

 private:
  int per_minute_;
  std::shared_ptr<Clock> clock_;
  std::mutex mutex_;
  std::deque<Clock::time_point> dispatched_;
};

// One scripted mock step: either a canned response or a forced failure.
struct MockEntry {
  std::string text;
  bool fail = false;

  static MockEntry ok(std::string t) { return MockEntry{std::move(t), false}; }
  static MockEntry failure() { return MockEntry{"", true}; }
};

// Pulls the first fenced code block (``` ... ```) out of model text and
// parses it as JSON; falls back to parsing the whole trimmed text.
inline std::optional<json> extract_structured_payload(const std::string& text) {
  std::string candidate;
  std::size_t open = text.find("```");
  if (open != std::string::npos) {
    std::size_t body_start = text.find('\n', open);
    if (body_start == std::string::npos) return std::nullopt;
    std::size_t close = text.find("```", body_start);
    if (close == std::string::npos) return std::nullopt;
    candidate = text.substr(body_start + 1, close - body_start - 1);
  } else {
    candidate = strings::trim(text);
  }
  json parsed = json::parse(candidate, nullptr, false);
  if (parsed.is_discarded()) return std::nullopt;
  return parsed;
}

class LlmGateway {
 public:
  LlmGateway(BackendConfig backend, PromptLibrary prompts,
             std::shared_ptr<Clock> clock = system_clock())
      : backend_(std::move(backend)),
        prompts_(std::move(prompts)),
        clock_(std::move(clock)),
        rate_limiter_(backend_.rate_limit, clock_) {
    backend_.validate();
  }

  const PromptLibrary& prompts() const { return prompts_; }
  const BackendConfig& backend() const { return backend_; }

  // Subsequent complete() calls whose template name matches `tag` consume
  // these entries in FIFO order; running past the end raises ScriptExhausted.
  void register_mock_script(const std::string& tag, std::vector<MockEntry> responses) {
    std::lock_guard<std::mutex> lock(mock_mutex_);
    auto& queue = scripts_[tag];
    queue.clear();
    queue.insert(queue.end(), std::make_move_iterator(responses.begin()),
                 std::make_move_iterator(responses.end()));
  }

  bool has_mock(const std::string& tag) const {
    std::lock_guard<std::mutex> lock(mock_mutex_);
    return scripts_.count(tag) > 0;
  }

  // Every prompt served from a mock script is captured here, in call order,
  // so tests can inspect exactly what each stage asked for.
  std::vector<std::string> mock_requests(const std::string& tag) const {
    std::lock_guard<std::mutex> lock(mock_mutex_);
    auto it = captured_.find(tag);
    return it == captured_.end() ? std::vector<std::string>{} : it->second;
  }

  ChatResponse complete(const ChatRequest& request) {
    if (!std::isfinite(request.decoding.temperature) || request.decoding.temperature < 0)
      throw Error("chat request temperature must be finite and >= 0");
    if (request.decoding.max_output_tokens < 1)
      throw Error("chat request max_output_tokens must be >= 1");

    const PromptTemplate& tmpl = prompts_.get(request.template_name);
    const std::string base_prompt = render_prompt(tmpl, request.bindings);
    const bool mocked = has_mock(request.template_name);

    std::string prompt = base_prompt;
    int attempts = 0;
    for (;;) {
      ++attempts;
      std::string raw;
      bool failed = false;
      std::string cause;
      try {
        raw = mocked ? next_mock_response(request.template_name, prompt)
                     : dispatch_live(prompt, request.decoding);
      } catch (const ScriptExhausted&) {
        throw;  // a script misconfiguration, never retried
      } catch (const TransportError& e) {
        failed = true;
        cause = e.what();
      }

      if (!failed) {
        if (!request.expects_structured)
          return ChatResponse{raw, std::nullopt, attempts};
        auto payload = extract_structured_payload(raw);
        if (payload)
          return ChatResponse{raw, std::move(payload), attempts};
        if (attempts > backend_.max_retries) throw StructuredParseFailure(raw);
        // Re-ask with a corrective instruction appended to the prompt.
        prompt = base_prompt +
                 "\n\nYour previous reply could not be parsed. Return only the "
                 "structured payload in a fenced code block, nothing else.";
      } else {
        if (attempts > backend_.max_retries) {
          if (cause.find("timed out") != std::string::npos) throw TimeoutError(cause);
          throw TransportError(cause);
        }
      }
      backoff(attempts);
    }
  }

 private:
  // Exponential backoff: 1 s, 2 s, 4 s, ... capped at 30 s.
  void backoff(int attempts_so_far) {
    double seconds = std::min(30.0, std::ldexp(1.0, attempts_so_far - 1));
    clock_->sleep_for(std::chrono::milliseconds(static_cast<long>(seconds * 1000)));
  }

  std::string next_mock_response(const std::string& tag, const std::string& prompt) {
    std::lock_guard<std::mutex> lock(mock_mutex_);
    captured_[tag].push_back(prompt);
    auto& queue = scripts_.at(tag);
    if (queue.empty()) throw ScriptExhausted(tag);
    MockEntry entry = std::move(queue.front());
    queue.pop_front();
    if (entry.fail) throw TransportError("scripted failure for tag: " + tag);
    return entry.text;
  }

  std::string dispatch_live(const std::string& prompt, const DecodingParams& decoding) {
    rate_limiter_.acquire();

    auto [base, path] = split_endpoint(backend_.endpoint);
    httplib::Client client(base);
    client.set_connection_timeout(std::chrono::milliseconds(
        static_cast<long>(backend_.timeout_seconds * 1000)));
    client.set_read_timeout(std::chrono::milliseconds(
        static_cast<long>(backend_.timeout_seconds * 1000)));

    httplib::Headers headers;
    if (const char* key = std::getenv(backend_.api_key_env_var.c_str()))
      headers.emplace("Authorization", std::string("Bearer ") + key);

    json body = {
        {"model", backend_.model_id},
        {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
        {"temperature", decoding.temperature},
        {"max_tokens", decoding.max_output_tokens},
    };

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      auto err = res.error();
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
        throw TimeoutError("request timed out: " + httplib::to_string(err));
      throw TransportError("transport failure: " + httplib::to_string(err));
    }
    if (res->status < 200 || res->status >= 300)
      throw TransportError("backend returned HTTP " + std::to_string(res->status));

    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("choices") ||
        !parsed["choices"].is_array() || parsed["choices"].empty())
      throw TransportError("backend returned malformed completion body");
    const json& msg = parsed["choices"][0];
    if (msg.contains("message") && msg["message"].contains("content") &&
        msg["message"]["content"].is_string())
      return msg["message"]["content"].get<std::string>();
    throw TransportError("completion body missing message content");
  }

  static std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = endpoint.find('/', host_start);
    if (path_start == std::string::npos) return {endpoint, "/v1/chat/completions"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
  }

  BackendConfig backend_;
  PromptLibrary prompts_;
  std::shared_ptr<Clock> clock_;
  RateLimiter rate_limiter_;

  mutable std::mutex mock_mutex_;
  std::map<std::string, std::deque<MockEntry>> scripts_;
  std::map<std::string, std::vector<std::string>> captured_;
};

}  // namespace dialoggen

#endif  // DIALOGGEN_GATEWAY_HPP
