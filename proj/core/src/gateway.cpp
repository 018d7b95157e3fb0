#include "potforge/gateway.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "potforge/digest.hpp"
#include "potforge/error.hpp"

namespace potforge {
namespace {

void append_field(std::string& out, std::string_view field) {
  out += std::to_string(field.size());
  out += ':';
  out += field;
  out += '\n';
}

std::string embed_key(std::string_view model_name, std::string_view text) {
  std::string buf = "potforge-embed-v1\n";
  append_field(buf, model_name);
  append_field(buf, text);
  return sha256_hex(buf);
}

}  // namespace

std::string_view to_string(EndpointKind kind) {
  return kind == EndpointKind::kCompletion ? "completion" : "embedding";
}

std::string_view to_string(RecordSource source) {
  switch (source) {
    case RecordSource::kLive: return "live";
    case RecordSource::kCache: return "cache";
    case RecordSource::kSimulator: return "simulator";
  }
  return "live";
}

std::string_view to_string(TokenProvenance provenance) {
  switch (provenance) {
    case TokenProvenance::kUsageField: return "usage_field";
    case TokenProvenance::kDelimitedSection: return "delimited_section";
    case TokenProvenance::kCompletionTotal: return "completion_total";
    case TokenProvenance::kMissing: return "missing";
    case TokenProvenance::kSimulator: return "simulator";
  }
  return "missing";
}

EndpointKind endpoint_kind_from_string(std::string_view s) {
  if (s == "completion") return EndpointKind::kCompletion;
  if (s == "embedding") return EndpointKind::kEmbedding;
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown endpoint kind '{}'", s));
}

RecordSource record_source_from_string(std::string_view s) {
  if (s == "live") return RecordSource::kLive;
  if (s == "cache") return RecordSource::kCache;
  if (s == "simulator") return RecordSource::kSimulator;
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown record source '{}'", s));
}

TokenProvenance token_provenance_from_string(std::string_view s) {
  for (auto p : {TokenProvenance::kUsageField, TokenProvenance::kDelimitedSection,
                 TokenProvenance::kCompletionTotal, TokenProvenance::kMissing,
                 TokenProvenance::kSimulator}) {
    if (to_string(p) == s) return p;
  }
  throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown token provenance '{}'", s));
}

void to_json(nlohmann::json& j, const CompletionRecord& r) {
  j = nlohmann::json{{"request_hash", r.request_hash},
                     {"answer_text", r.answer_text},
                     {"reasoning_tokens", r.reasoning_tokens},
                     {"output_tokens", r.output_tokens},
                     {"latency_ms", r.latency_ms},
                     {"source", to_string(r.source)},
                     {"provenance", to_string(r.provenance)}};
}

void from_json(const nlohmann::json& j, CompletionRecord& r) {
  r.request_hash = j.at("request_hash").get<std::string>();
  r.answer_text = j.at("answer_text").get<std::string>();
  r.reasoning_tokens = j.at("reasoning_tokens").get<std::int64_t>();
  r.output_tokens = j.value("output_tokens", std::int64_t{0});
  r.latency_ms = j.value("latency_ms", std::int64_t{0});
  r.source = record_source_from_string(j.at("source").get<std::string>());
  r.provenance = token_provenance_from_string(j.value("provenance", std::string("usage_field")));
}

void to_json(nlohmann::json& j, const CompletionRequest& r) {
  j = nlohmann::json{{"model_name", r.model_name},
                     {"prompt", r.prompt},
                     {"temperature", r.temperature},
                     {"seed", r.seed}};
}

std::string cache_key(std::string_view model_name, std::string_view prompt, double temperature,
                      std::int64_t seed) {
  if (temperature == 0.0) temperature = 0.0;  // fold -0.0
  std::string buf = "potforge-request-v1\n";
  append_field(buf, model_name);
  append_field(buf, prompt);
  append_field(buf, fmt::format("{:016x}", std::bit_cast<std::uint64_t>(temperature)));
  append_field(buf, std::to_string(seed));
  return sha256_hex(buf);
}

Gateway::Gateway(GatewayOptions options)
    : options_(std::move(options)), cache_(options_.cache_dir) {}

Gateway::~Gateway() = default;

void Gateway::add_endpoint(ModelEndpoint endpoint, std::shared_ptr<ModelBackend> backend) {
  if (!backend) throw Error(ErrorCode::kInvalidArgument, "endpoint '" + endpoint.id + "' has no backend");
  if (bindings_.contains(endpoint.id)) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate endpoint id '" + endpoint.id + "'");
  }
  Binding b;
  b.limiter = std::make_unique<TokenBucket>(endpoint.requests_per_minute);
  b.backend = std::move(backend);
  const std::string id = endpoint.id;
  b.endpoint = std::move(endpoint);
  bindings_.emplace(id, std::move(b));
}

bool Gateway::has_endpoint(std::string_view id) const { return bindings_.contains(id); }

const Gateway::Binding& Gateway::binding(std::string_view id) const {
  auto it = bindings_.find(id);
  if (it == bindings_.end()) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown endpoint '{}'", id));
  }
  return it->second;
}

const ModelEndpoint& Gateway::endpoint(std::string_view id) const { return binding(id).endpoint; }

void Gateway::append_usage(const CompletionRecord& record) {
  if (options_.usage_log.empty()) return;
  std::lock_guard lock(usage_mu_);
  std::ofstream out(options_.usage_log, std::ios::app);
  out << nlohmann::json{{"request_hash", record.request_hash},
                        {"reasoning_tokens", record.reasoning_tokens},
                        {"source", to_string(record.source)}}
             .dump()
      << '\n';
}

CompletionRecord Gateway::complete(const ModelEndpoint& endpoint, std::string_view prompt,
                                   double temperature, std::int64_t seed) {
  const Binding& b = binding(endpoint.id);
  if (b.endpoint.kind != EndpointKind::kCompletion) {
    throw Error(ErrorCode::kInvalidArgument, "endpoint '" + endpoint.id + "' is not a completion endpoint");
  }
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("temperature {} outside [0, 2]", temperature));
  }

  CompletionRequest request{b.endpoint.model_name, std::string(prompt), temperature, seed};
  const std::string key = cache_key(request.model_name, request.prompt, temperature, seed);

  bool hit = false;
  nlohmann::json entry = cache_.get_or_compute(
      key,
      [&] {
        b.limiter->acquire();
        CompletionRecord record = b.backend->complete(b.endpoint, request);
        record.request_hash = key;
        if (record.reasoning_tokens < 0) {
          throw Error(ErrorCode::kMalformedResponse, "negative reasoning token count");
        }
        if (record.provenance == TokenProvenance::kMissing ||
            record.provenance == TokenProvenance::kCompletionTotal) {
          spdlog::warn("{}: no reasoning usage field, reasoning_tokens from {}", b.endpoint.id,
                       to_string(record.provenance));
          note_warning();
        }
        backend_calls_.fetch_add(1);
        reasoning_tokens_.fetch_add(record.reasoning_tokens);
        append_usage(record);
        return nlohmann::json{{"request", request}, {"record", record}};
      },
      &hit);

  CompletionRecord record = entry.at("record").get<CompletionRecord>();
  if (hit) {
    cache_hits_.fetch_add(1);
    record.source = RecordSource::kCache;
  }
  return record;
}

EmbeddingVector Gateway::embed(const ModelEndpoint& endpoint, std::string_view text) {
  const Binding& b = binding(endpoint.id);
  if (b.endpoint.kind != EndpointKind::kEmbedding) {
    throw Error(ErrorCode::kInvalidArgument, "endpoint '" + endpoint.id + "' is not an embedding endpoint");
  }
  if (text.empty()) throw Error(ErrorCode::kEmptyInput, "cannot embed empty text");

  const std::string key = embed_key(b.endpoint.model_name, text);
  bool hit = false;
  nlohmann::json entry = cache_.get_or_compute(
      key,
      [&] {
        b.limiter->acquire();
        std::vector<EmbeddingVector> vectors = b.backend->embed(b.endpoint, text);
        EmbeddingVector pooled = vectors.size() == 1 ? vectors.front() : mean_pool(vectors);
        if (pooled.dim() == 0) throw Error(ErrorCode::kMalformedResponse, "empty embedding");
        for (double x : pooled.values) {
          if (!std::isfinite(x)) throw Error(ErrorCode::kMalformedResponse, "non-finite embedding value");
        }
        backend_calls_.fetch_add(1);
        return nlohmann::json{{"request", {{"model_name", b.endpoint.model_name}, {"text", text}}},
                              {"record", {{"values", pooled.values}}}};
      },
      &hit);
  if (hit) cache_hits_.fetch_add(1);

  EmbeddingVector v{entry.at("record").at("values").get<std::vector<double>>()};
  std::lock_guard lock(mu_);
  auto [it, inserted] = embed_dims_.emplace(b.endpoint.id, v.dim());
  if (!inserted && it->second != v.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("endpoint '{}' returned dimension {} after {}", b.endpoint.id, v.dim(),
                            it->second));
  }
  if (b.endpoint.dimension > 0 && v.dim() != static_cast<std::size_t>(b.endpoint.dimension)) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("endpoint '{}' declared dimension {} but returned {}", b.endpoint.id,
                            b.endpoint.dimension, v.dim()));
  }
  return v;
}

GatewayStats Gateway::stats() const {
  return GatewayStats{backend_calls_.load(), cache_hits_.load(), reasoning_tokens_.load(),
                      warnings_.load()};
}

void Gateway::note_warning() { warnings_.fetch_add(1); }

}  // namespace potforge
