#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "potforge/embedding.hpp"
#include "potforge/rate_limiter.hpp"
#include "potforge/response_cache.hpp"

namespace potforge {

enum class EndpointKind { kCompletion, kEmbedding };

// One model role binding. Credentials are never stored here: `auth_ref`
// names the environment variable that holds them.
struct ModelEndpoint {
  std::string id;
  EndpointKind kind = EndpointKind::kCompletion;
  std::string base_url;
  std::string model_name;
  std::string auth_ref;
  int max_retries = 3;
  double timeout_s = 60.0;
  int requests_per_minute = 0;  // 0 = unlimited
  int dimension = 0;            // declared embedding dimension, 0 = provider decides

  bool operator==(const ModelEndpoint&) const = default;
};

enum class RecordSource { kLive, kCache, kSimulator };

// Where reasoning_tokens came from.
enum class TokenProvenance {
  kUsageField,        // provider reasoning-usage accounting
  kDelimitedSection,  // counted inside an explicit reasoning section
  kCompletionTotal,   // fell back to total completion tokens
  kMissing,           // nothing usable; reasoning_tokens = 0
  kSimulator,
};

struct CompletionRecord {
  std::string request_hash;
  std::string answer_text;
  std::int64_t reasoning_tokens = 0;
  std::int64_t output_tokens = 0;
  std::int64_t latency_ms = 0;
  RecordSource source = RecordSource::kLive;
  TokenProvenance provenance = TokenProvenance::kUsageField;

  bool operator==(const CompletionRecord&) const = default;
};

struct CompletionRequest {
  std::string model_name;
  std::string prompt;
  double temperature = 0.0;
  std::int64_t seed = 0;
};

std::string_view to_string(EndpointKind kind);
std::string_view to_string(RecordSource source);
std::string_view to_string(TokenProvenance provenance);
EndpointKind endpoint_kind_from_string(std::string_view s);
RecordSource record_source_from_string(std::string_view s);
TokenProvenance token_provenance_from_string(std::string_view s);

void to_json(nlohmann::json& j, const CompletionRecord& r);
void from_json(const nlohmann::json& j, CompletionRecord& r);
void to_json(nlohmann::json& j, const CompletionRequest& r);

// Stable content digest over the declared request fields. Independent of
// process, wall clock and platform; -0.0 and 0.0 hash equal.
std::string cache_key(std::string_view model_name, std::string_view prompt,
                      double temperature, std::int64_t seed);

// A provider implementation behind one endpoint. Backends do their own
// transport-level retrying; the gateway adds caching, rate limiting and
// accounting on top.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  virtual CompletionRecord complete(const ModelEndpoint& endpoint,
                                    const CompletionRequest& request) = 0;

  // One vector for the whole text, or one per token (pooled by the
  // gateway).
  virtual std::vector<EmbeddingVector> embed(const ModelEndpoint& endpoint,
                                             std::string_view text) = 0;
};

struct GatewayStats {
  std::int64_t backend_calls = 0;  // completions + embeddings that missed the cache
  std::int64_t cache_hits = 0;
  std::int64_t reasoning_tokens = 0;  // summed over non-cache completion records
  std::int64_t warnings = 0;
};

struct GatewayOptions {
  // Directory for the persistent response cache; empty = memory only.
  std::filesystem::path cache_dir;
  // Append-only accounting log, one line per non-cache completion.
  std::filesystem::path usage_log;
};

class Gateway {
 public:
  explicit Gateway(GatewayOptions options = {});
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  void add_endpoint(ModelEndpoint endpoint, std::shared_ptr<ModelBackend> backend);
  bool has_endpoint(std::string_view id) const;
  const ModelEndpoint& endpoint(std::string_view id) const;

  // Throws kInvalidArgument on a wrong endpoint kind or out-of-range
  // temperature; backend errors propagate.
  CompletionRecord complete(const ModelEndpoint& endpoint, std::string_view prompt,
                            double temperature, std::int64_t seed);
  CompletionRecord complete(std::string_view endpoint_id, std::string_view prompt,
                            double temperature, std::int64_t seed) {
    return complete(endpoint(endpoint_id), prompt, temperature, seed);
  }

  // Throws kEmptyInput on empty text and kDimensionMismatch when the
  // provider's dimension drifts within this gateway's lifetime.
  EmbeddingVector embed(const ModelEndpoint& endpoint, std::string_view text);
  EmbeddingVector embed(std::string_view endpoint_id, std::string_view text) {
    return embed(endpoint(endpoint_id), text);
  }

  GatewayStats stats() const;
  void note_warning();

 private:
  struct Binding {
    ModelEndpoint endpoint;
    std::shared_ptr<ModelBackend> backend;
    std::unique_ptr<TokenBucket> limiter;
  };

  const Binding& binding(std::string_view id) const;
  void append_usage(const CompletionRecord& record);

  GatewayOptions options_;
  ResponseCache cache_;
  std::map<std::string, Binding, std::less<>> bindings_;

  mutable std::mutex mu_;
  std::map<std::string, std::size_t, std::less<>> embed_dims_;
  std::mutex usage_mu_;

  std::atomic<std::int64_t> backend_calls_{0};
  std::atomic<std::int64_t> cache_hits_{0};
  std::atomic<std::int64_t> reasoning_tokens_{0};
  std::atomic<std::int64_t> warnings_{0};
};

}  // namespace potforge
