#pragma once

#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace potforge {

// Write-once, content-addressed store of {request, record} objects.
//
// On disk: one file per key, `<dir>/<key>.json`, written via temp + rename.
// Concurrent lookups of the same missing key are coalesced: the first caller
// computes, the rest wait for its result.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir = {});

  std::optional<nlohmann::json> get(const std::string& key);

  // Returns the stored entry. When the key already exists the existing
  // entry wins and `entry` is discarded.
  nlohmann::json put(const std::string& key, nlohmann::json entry);

  // `hit` is set to true when the value did not come from `compute`.
  nlohmann::json get_or_compute(const std::string& key,
                                const std::function<nlohmann::json()>& compute,
                                bool* hit);

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::optional<nlohmann::json> load_from_disk(const std::string& key) const;
  void store_to_disk(const std::string& key, const nlohmann::json& entry) const;

  std::filesystem::path dir_;
  std::mutex mu_;
  std::map<std::string, nlohmann::json> memory_;
  std::map<std::string, std::shared_future<nlohmann::json>> in_flight_;
};

}  // namespace potforge
