#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "h3d/clock.hpp"
#include "h3d/error.hpp"

namespace h3d {

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{500};
  double backoff_factor = 2.0;
  double jitter_fraction = 0.1;

  // Validates max_attempts >= 1, backoff_factor >= 1, jitter in [0, 1].
  void check() const;

  // Delay scheduled after failed attempt n (1-based), before jitter:
  // base_delay * backoff_factor^(n-1).
  std::chrono::nanoseconds nominal_delay(int n) const;
};

// Failure raised by a backend call. `retryable` marks transient faults
// (timeouts, 5xx/429 responses, refused connections).
class BackendError : public Error {
 public:
  BackendError(ErrorCode code, const std::string& message, bool retryable)
      : Error(code, message), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

struct RetryTrace {
  int attempts = 0;
  std::vector<std::chrono::nanoseconds> delays;
};

// Supplies sleeping and jitter randomness for with_retry.
class RetryContext {
 public:
  RetryContext(Clock& clock, std::uint64_t seed = 0x5eed) : clock_(clock), rng_(seed) {}

  std::chrono::nanoseconds jittered(std::chrono::nanoseconds nominal, double jitter) {
    if (jitter <= 0.0) return nominal;
    std::uniform_real_distribution<double> dist(-jitter, jitter);
    auto scaled = static_cast<double>(nominal.count()) * (1.0 + dist(rng_));
    return std::chrono::nanoseconds(static_cast<std::int64_t>(std::llround(std::max(0.0, scaled))));
  }

  void sleep(std::chrono::nanoseconds d) { clock_.sleep_for(d); }

 private:
  Clock& clock_;
  std::mt19937_64 rng_;
};

// Runs `call` until it succeeds, a non-retryable BackendError escapes, or
// policy.max_attempts attempts have failed. Exhaustion is reported as
// kBackendUnreachable carrying the last error message. Exceptions that are
// not BackendError propagate unchanged.
template <class F>
auto with_retry(F&& call, const RetryPolicy& policy, RetryContext& ctx, RetryTrace* trace = nullptr)
    -> decltype(call()) {
  policy.check();
  RetryTrace local;
  RetryTrace& t = trace ? *trace : local;
  t = {};
  for (int attempt = 1;; ++attempt) {
    t.attempts = attempt;
    try {
      return call();
    } catch (const BackendError& e) {
      if (!e.retryable()) throw;
      if (attempt >= policy.max_attempts) {
        throw BackendError(ErrorCode::kBackendUnreachable,
                           "retries exhausted after " + std::to_string(attempt) +
                               " attempt(s): " + e.what(),
                           false);
      }
      auto delay = ctx.jittered(policy.nominal_delay(attempt), policy.jitter_fraction);
      t.delays.push_back(delay);
      ctx.sleep(delay);
    }
  }
}

}  // namespace h3d
