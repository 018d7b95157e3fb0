#pragma once

#include <atomic>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "potforge/error.hpp"
#include "potforge/gateway.hpp"

namespace potforge::testing {

// A scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("potforge-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Backend whose completions come from a callback; counts calls.
class ScriptedBackend final : public ModelBackend {
 public:
  using Fn = std::function<CompletionRecord(const CompletionRequest&)>;
  explicit ScriptedBackend(Fn fn) : fn_(std::move(fn)) {}

  // Returns the queued answers in order, then repeats the last one.
  static std::shared_ptr<ScriptedBackend> replies(std::vector<std::string> texts) {
    auto queue = std::make_shared<std::deque<std::string>>(texts.begin(), texts.end());
    auto mu = std::make_shared<std::mutex>();
    return std::make_shared<ScriptedBackend>([queue, mu](const CompletionRequest&) {
      std::lock_guard lock(*mu);
      CompletionRecord r;
      r.answer_text = queue->front();
      if (queue->size() > 1) queue->pop_front();
      r.reasoning_tokens = 10;
      return r;
    });
  }

  CompletionRecord complete(const ModelEndpoint&, const CompletionRequest& request) override {
    ++calls;
    return fn_(request);
  }
  std::vector<EmbeddingVector> embed(const ModelEndpoint&, std::string_view) override {
    throw Error(ErrorCode::kInvalidArgument, "scripted backend has no embeddings");
  }

  std::atomic<int> calls{0};

 private:
  Fn fn_;
};

inline ModelEndpoint completion_endpoint(std::string id) {
  ModelEndpoint e;
  e.id = id;
  e.model_name = id;
  e.base_url = "test://" + id;
  e.max_retries = 0;
  return e;
}

}  // namespace potforge::testing
