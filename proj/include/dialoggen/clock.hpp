#ifndef DIALOGGEN_CLOCK_HPP
#define DIALOGGEN_CLOCK_HPP

#include <chrono>
#include <memory>
#include <thread>

namespace dialoggen {

// Injectable time source. The gateway's retry backoff and rate limiter go
// through this interface so tests can drive them with a fake clock.
class Clock {
 public:
  using duration = std::chrono::milliseconds;
  using time_point = std::chrono::steady_clock::time_point;

  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_for(duration d) = 0;
};

class SystemClock final : public Clock {
 public:
  time_point now() override { return std::chrono::steady_clock::now(); }
  void sleep_for(duration d) override { std::this_thread::sleep_for(d); }
};

inline std::shared_ptr<Clock> system_clock() {
  return std::make_shared<SystemClock>();
}

}  // namespace dialoggen

#endif  // DIALOGGEN_CLOCK_HPP
