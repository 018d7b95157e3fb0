#include "potforge/rate_limiter.hpp"

#include <algorithm>
#include <thread>

namespace potforge {

TokenBucket::TokenBucket(int requests_per_minute)
    : rpm_(std::max(requests_per_minute, 0)), tokens_(static_cast<double>(rpm_)) {}

void TokenBucket::refill(Clock::time_point now) {
  if (!started_) {
    started_ = true;
    last_ = now;
    return;
  }
  if (now <= last_) return;
  const double elapsed = std::chrono::duration<double>(now - last_).count();
  tokens_ = std::min(static_cast<double>(rpm_), tokens_ + elapsed * rpm_ / 60.0);
  last_ = now;
}

bool TokenBucket::try_acquire(Clock::time_point now) {
  if (rpm_ == 0) return true;
  std::lock_guard lock(mu_);
  refill(now);
  if (tokens_ >= 1.0) {
    tokens_ -= 1.0;
    return true;
  }
  return false;
}

void TokenBucket::acquire() {
  if (rpm_ == 0) return;
  while (!try_acquire(Clock::now())) {
    std::this_thread::sleep_for(std::chrono::milliseconds(std::max(1, 60000 / rpm_ / 4)));
  }
}

}  // namespace potforge
