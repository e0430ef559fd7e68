#pragma once

#include <chrono>
#include <cstdint>

namespace agg {

/// Nanoseconds since run start.
using Timestamp = std::int64_t;
using Duration = std::int64_t;

enum class ClockMode { Wall, Virtual };

/// Per-context clock. Virtual clocks only move when advance/catch_up are
/// called; wall clocks read steady_clock relative to a shared origin and
/// ignore modeled costs.
class Clock {
 public:
  using Origin = std::chrono::steady_clock::time_point;

  Clock() = default;
  Clock(ClockMode mode, Origin origin) : mode_(mode), origin_(origin) {}

  ClockMode mode() const noexcept { return mode_; }

  Timestamp now() const noexcept {
    if (mode_ == ClockMode::Virtual) return logical_;
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - origin_)
        .count();
  }

  /// Charges modeled work to this context.
  void advance(Duration cost) noexcept {
    if (mode_ == ClockMode::Virtual) logical_ += cost;
  }

  /// Moves a virtual clock forward to t if it is behind. Never moves back.
  void catch_up(Timestamp t) noexcept {
    if (mode_ == ClockMode::Virtual && t > logical_) logical_ = t;
  }

 private:
  ClockMode mode_ = ClockMode::Virtual;
  Origin origin_{};
  Timestamp logical_ = 0;
};

}  // namespace agg
