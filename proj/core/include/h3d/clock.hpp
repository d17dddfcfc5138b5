#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace h3d {

// Time source for stage timings and backend delays. Production code uses
// SystemClock; tests substitute SimulatedClock so that configured latencies
// replay exactly without real waiting.
class Clock {
 public:
  using Duration = std::chrono::nanoseconds;

  virtual ~Clock() = default;
  virtual Duration monotonic() const = 0;
  virtual std::int64_t unix_millis() const = 0;
  virtual void sleep_for(Duration d) = 0;

  double seconds_since(Duration start) const {
    return std::chrono::duration<double>(monotonic() - start).count();
  }
};

class SystemClock final : public Clock {
 public:
  Duration monotonic() const override;
  std::int64_t unix_millis() const override;
  void sleep_for(Duration d) override;
};

// Advances only when someone sleeps on it.
class SimulatedClock final : public Clock {
 public:
  explicit SimulatedClock(std::int64_t start_unix_millis = 1'700'000'000'000)
      : start_millis_(start_unix_millis) {}

  Duration monotonic() const override { return Duration(now_ns_.load()); }
  std::int64_t unix_millis() const override {
    return start_millis_ + now_ns_.load() / 1'000'000;
  }
  void sleep_for(Duration d) override { now_ns_ += d.count(); }

 private:
  std::int64_t start_millis_;
  std::atomic<std::int64_t> now_ns_{0};
};

inline Clock::Duration from_seconds(double s) {
  return std::chrono::round<Clock::Duration>(std::chrono::duration<double>(s));
}

}  // namespace h3d
