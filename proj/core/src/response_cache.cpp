#include "potforge/response_cache.hpp"

#include <fstream>
#include <sstream>
#include <system_error>
#include <thread>

#include <spdlog/spdlog.h>

#include "potforge/error.hpp"

namespace potforge {

namespace fs = std::filesystem;

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create cache directory " + dir_.string());
  }
}

std::optional<nlohmann::json> ResponseCache::load_from_disk(const std::string& key) const {
  if (dir_.empty()) return std::nullopt;
  std::ifstream in(dir_ / (key + ".json"));
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  auto j = nlohmann::json::parse(ss.str(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    spdlog::warn("ignoring unreadable cache entry {}", key);
    return std::nullopt;
  }
  return j;
}

void ResponseCache::store_to_disk(const std::string& key, const nlohmann::json& entry) const {
  if (dir_.empty()) return;
  const fs::path target = dir_ / (key + ".json");
  if (fs::exists(target)) return;
  const fs::path tmp = dir_ / (key + ".json.tmp" + std::to_string(std::hash<std::thread::id>{}(
                                                      std::this_thread::get_id())));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write cache entry " + tmp.string());
    out << entry.dump() << '\n';
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot publish cache entry " + target.string());
  }
}

std::optional<nlohmann::json> ResponseCache::get(const std::string& key) {
  {
    std::lock_guard lock(mu_);
    if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  }
  auto j = load_from_disk(key);
  if (j) {
    std::lock_guard lock(mu_);
    memory_.emplace(key, *j);
  }
  return j;
}

nlohmann::json ResponseCache::put(const std::string& key, nlohmann::json entry) {
  {
    std::lock_guard lock(mu_);
    if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  }
  if (auto existing = load_from_disk(key)) {
    std::lock_guard lock(mu_);
    return memory_.emplace(key, *existing).first->second;
  }
  store_to_disk(key, entry);
  std::lock_guard lock(mu_);
  return memory_.emplace(key, std::move(entry)).first->second;
}

nlohmann::json ResponseCache::get_or_compute(const std::string& key,
                                             const std::function<nlohmann::json()>& compute,
                                             bool* hit) {
  if (auto cached = get(key)) {
    if (hit) *hit = true;
    return *cached;
  }

  std::promise<nlohmann::json> promise;
  std::shared_future<nlohmann::json> waiting;
  {
    std::lock_guard lock(mu_);
    if (auto it = memory_.find(key); it != memory_.end()) {
      if (hit) *hit = true;
      return it->second;
    }
    if (auto it = in_flight_.find(key); it != in_flight_.end()) {
      waiting = it->second;
    } else {
      in_flight_.emplace(key, promise.get_future().share());
    }
  }
  if (waiting.valid()) {
    if (hit) *hit = true;
    return waiting.get();
  }

  try {
    nlohmann::json stored = put(key, compute());
    promise.set_value(stored);
    std::lock_guard lock(mu_);
    in_flight_.erase(key);
    if (hit) *hit = false;
    return stored;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(mu_);
    in_flight_.erase(key);
    throw;
  }
}

}  // namespace potforge
