#pragma once

#include <chrono>
#include <mutex>

namespace potforge {

// Token bucket shared by every worker that talks to one endpoint.
// Capacity equals the per-minute budget; tokens refill continuously.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;

  explicit TokenBucket(int requests_per_minute);

  // Non-blocking; false when the bucket is empty at `now`.
  bool try_acquire(Clock::time_point now);

  // Blocks until a token is available.
  void acquire();

  int requests_per_minute() const noexcept { return rpm_; }

 private:
  void refill(Clock::time_point now);

  std::mutex mu_;
  int rpm_;
  double tokens_;
  Clock::time_point last_;
  bool started_ = false;
};

}  // namespace potforge
