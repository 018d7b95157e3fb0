#include "potforge/http_backend.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "potforge/error.hpp"

namespace potforge {
namespace {

using nlohmann::json;

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "URL without scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

class HttplibTransport final : public Transport {
 public:
  HttpResponse post(const HttpRequest& request) override {
    const SplitUrl url = split_url(request.url);
    httplib::Client client(url.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
    client.set_connection_timeout(secs.count(), 0);
    client.set_read_timeout(secs.count(), 0);
    client.set_write_timeout(secs.count(), 0);
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);
    auto res = client.Post(url.path.empty() ? "/" : url.path, headers, request.body,
                           "application/json");
    if (!res) return HttpResponse{0, httplib::to_string(res.error())};
    return HttpResponse{res->status, res->body};
  }
};

bool retriable(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

// Text between <think> and </think>, if present; `rest` receives the text
// with that section removed.
std::optional<std::string> think_section(const std::string& content, std::string* rest) {
  const auto open = content.find("<think>");
  if (open == std::string::npos) return std::nullopt;
  const auto close = content.find("</think>", open);
  if (close == std::string::npos) return std::nullopt;
  if (rest) *rest = content.substr(0, open) + content.substr(close + 8);
  return content.substr(open + 7, close - open - 7);
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::unique_ptr<Transport> make_http_transport() { return std::make_unique<HttplibTransport>(); }

EnvLookup process_environment() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
}

std::int64_t count_tokens(std::string_view text) noexcept {
  std::int64_t n = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

CompletionRecord parse_chat_completion(const std::string& body) {
  const json j = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kMalformedResponse, "response is not a JSON object");
  }
  const json* message = nullptr;
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty() &&
      j["choices"][0].is_object() && j["choices"][0].contains("message")) {
    message = &j["choices"][0]["message"];
  }
  if (message == nullptr || !message->contains("content") || !(*message)["content"].is_string()) {
    throw Error(ErrorCode::kMalformedResponse, "response has no message body");
  }

  CompletionRecord r;
  r.source = RecordSource::kLive;
  std::string content = (*message)["content"].get<std::string>();
  std::string without_think = content;
  const auto think = think_section(content, &without_think);
  r.answer_text = trim(without_think);

  const json usage = j.value("usage", json::object());
  r.output_tokens = usage.value("completion_tokens", std::int64_t{0});

  if (usage.contains("completion_tokens_details") &&
      usage["completion_tokens_details"].is_object() &&
      usage["completion_tokens_details"].contains("reasoning_tokens") &&
      usage["completion_tokens_details"]["reasoning_tokens"].is_number_integer()) {
    r.reasoning_tokens = usage["completion_tokens_details"]["reasoning_tokens"].get<std::int64_t>();
    r.provenance = TokenProvenance::kUsageField;
  } else if (usage.contains("reasoning_tokens") && usage["reasoning_tokens"].is_number_integer()) {
    r.reasoning_tokens = usage["reasoning_tokens"].get<std::int64_t>();
    r.provenance = TokenProvenance::kUsageField;
  } else if (message->contains("reasoning_content") && (*message)["reasoning_content"].is_string()) {
    r.reasoning_tokens = count_tokens((*message)["reasoning_content"].get<std::string>());
    r.provenance = TokenProvenance::kDelimitedSection;
  } else if (think) {
    r.reasoning_tokens = count_tokens(*think);
    r.provenance = TokenProvenance::kDelimitedSection;
  } else if (usage.contains("completion_tokens")) {
    r.reasoning_tokens = r.output_tokens;
    r.provenance = TokenProvenance::kCompletionTotal;
  } else {
    r.reasoning_tokens = 0;
    r.provenance = TokenProvenance::kMissing;
  }
  return r;
}

HttpBackend::HttpBackend(std::shared_ptr<Transport> transport, EnvLookup env, RetryPolicy retry)
    : transport_(std::move(transport)), env_(std::move(env)), retry_(std::move(retry)) {
  if (!transport_) throw Error(ErrorCode::kInvalidArgument, "HttpBackend needs a transport");
  if (!env_) env_ = process_environment();
}

HttpResponse HttpBackend::post_with_retries(const ModelEndpoint& endpoint, const std::string& path,
                                            const std::string& body) {
  HttpRequest request;
  request.url = endpoint.base_url;
  while (!request.url.empty() && request.url.back() == '/') request.url.pop_back();
  request.url += path;
  request.body = body;
  request.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(endpoint.timeout_s * 1000));
  if (!endpoint.auth_ref.empty()) {
    const auto secret = env_(endpoint.auth_ref);
    if (!secret || secret->empty()) {
      throw Error(ErrorCode::kAuth, "environment variable " + endpoint.auth_ref + " is not set");
    }
    request.headers.emplace_back("Authorization", "Bearer " + *secret);
  }

  const int attempts = std::max(endpoint.max_retries, 0) + 1;
  HttpResponse last;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      auto delay = retry_.base_delay * (1LL << std::min(attempt - 1, 20));
      delay = std::min<std::chrono::milliseconds>(delay, retry_.max_delay);
      if (retry_.sleep) {
        retry_.sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
    }
    last = transport_->post(request);
    if (last.status == 401 || last.status == 403) {
      throw Error(ErrorCode::kAuth, endpoint.id + " rejected credentials (HTTP " +
                                        std::to_string(last.status) + ")");
    }
    if (last.status >= 200 && last.status < 300) return last;
    if (!retriable(last.status)) break;
    spdlog::warn("{}: attempt {}/{} failed (HTTP {})", endpoint.id, attempt + 1, attempts,
                 last.status);
  }
  throw Error(ErrorCode::kNetwork, endpoint.id + " failed after " + std::to_string(attempts) +
                                       " attempt(s), last status " + std::to_string(last.status));
}

CompletionRecord HttpBackend::complete(const ModelEndpoint& endpoint,
                                       const CompletionRequest& request) {
  json body{{"model", request.model_name},
            {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
            {"temperature", request.temperature},
            {"seed", request.seed}};
  const auto start = std::chrono::steady_clock::now();
  const HttpResponse res = post_with_retries(endpoint, "/chat/completions", body.dump());
  CompletionRecord record = parse_chat_completion(res.body);
  record.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  return record;
}

std::vector<EmbeddingVector> HttpBackend::embed(const ModelEndpoint& endpoint,
                                                std::string_view text) {
  json body{{"model", endpoint.model_name}, {"input", std::string(text)}};
  const HttpResponse res = post_with_retries(endpoint, "/embeddings", body.dump());
  const json j = json::parse(res.body, nullptr, false);
  if (j.is_discarded() || !j.contains("data") || !j["data"].is_array() || j["data"].empty()) {
    throw Error(ErrorCode::kMalformedResponse, "embedding response has no data");
  }
  std::vector<EmbeddingVector> out;
  for (const auto& item : j["data"]) {
    if (!item.contains("embedding") || !item["embedding"].is_array()) {
      throw Error(ErrorCode::kMalformedResponse, "embedding item has no vector");
    }
    out.push_back(EmbeddingVector{item["embedding"].get<std::vector<double>>()});
  }
  return out;
}

}  // namespace potforge
