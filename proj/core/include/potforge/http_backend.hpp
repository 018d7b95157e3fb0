#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "potforge/gateway.hpp"

namespace potforge {

struct HttpRequest {
  std::string url;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
  std::chrono::milliseconds timeout{60000};
};

struct HttpResponse {
  int status = 0;  // 0 = transport failure (connect, timeout, reset)
  std::string body;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

// cpp-httplib transport; supports http:// and https://.
std::unique_ptr<Transport> make_http_transport();

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_environment();

struct RetryPolicy {
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{30000};
  std::function<void(std::chrono::milliseconds)> sleep;  // empty = this_thread::sleep_for
};

// OpenAI-compatible chat-completions / embeddings client.
//
// Retries transport failures, 429 and 5xx with exponential backoff up to
// endpoint.max_retries extra attempts. 401/403 raise kAuth immediately.
class HttpBackend final : public ModelBackend {
 public:
  HttpBackend(std::shared_ptr<Transport> transport, EnvLookup env, RetryPolicy retry = {});

  CompletionRecord complete(const ModelEndpoint& endpoint,
                            const CompletionRequest& request) override;
  std::vector<EmbeddingVector> embed(const ModelEndpoint& endpoint,
                                     std::string_view text) override;

 private:
  HttpResponse post_with_retries(const ModelEndpoint& endpoint, const std::string& path,
                                 const std::string& body);

  std::shared_ptr<Transport> transport_;
  EnvLookup env_;
  RetryPolicy retry_;
};

// Parses one chat-completions payload. Exposed for tests.
// Throws kMalformedResponse when no message body is present.
CompletionRecord parse_chat_completion(const std::string& body);

// Whitespace-delimited token count, used when a provider only exposes a
// reasoning section as text.
std::int64_t count_tokens(std::string_view text) noexcept;

}  // namespace potforge
