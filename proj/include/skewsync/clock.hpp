#pragma once

// Hardware clock model and the skew conventions shared by the rest of the
// library.
//
// Skew is a dimensionless fractional offset. A receiver with skew tau has a
// tick period (1 + tau) times the nominal one, so a negative skew means the
// receiver counts faster than the transmitter. Counting both clocks over the
// same wall-clock window gives tau = tx_ticks / rx_ticks - 1.

#include <cmath>
#include <cstdint>
#include <optional>

#include "skewsync/error.hpp"

namespace skewsync {

struct ClockModel {
  double nominal_tick_rate = 1.0;  // ticks per second
  double skew = 0.0;
  double phase_offset = 0.0;  // seconds

  ClockModel() = default;
  ClockModel(double rate, double skew_, double phase = 0.0)
      : nominal_tick_rate(rate), skew(skew_), phase_offset(phase) {
    validate();
  }

  void validate() const {
    detail::require(nominal_tick_rate > 0.0 && std::isfinite(nominal_tick_rate),
                    "clock tick rate must be positive");
    detail::require(std::abs(skew) < 0.1, "clock skew magnitude must be below 0.1");
    detail::require(std::isfinite(phase_offset), "clock phase offset must be finite");
  }

  /// Ticks per second actually produced.
  double tick_rate() const { return nominal_tick_rate / (1.0 + skew); }

  /// Clock reading at wall-clock time t (seconds).
  double reading(double t) const { return tick_rate() * (t + phase_offset); }

  /// Count of whole ticks in [0, duration], counting from `first`.
  /// The count never rounds up, matching a counter sampled at the window end.
  std::int64_t last_tick(double duration, std::int64_t first = 1) const {
    // Small relative guard so exact products like 100000 * 1.0 do not drop a tick.
    const double span = duration * tick_rate();
    return first + static_cast<std::int64_t>(std::floor(span * (1.0 + 1e-12))) - 1;
  }
};

struct TickCount {
  std::int64_t first_tick = 0;
  std::int64_t last_tick = 0;

  std::int64_t span() const { return last_tick - first_tick; }
};

/// Application-layer skew of the receiver relative to the transmitter from
/// tick counts taken over the same interval: (tx span / rx span) - 1.
inline double skew_from_counts(const TickCount& tx, const TickCount& rx) {
  detail::require(tx.span() > 0, "transmitter tick span must be positive");
  detail::require(rx.span() > 0, "receiver tick span must be positive");
  return static_cast<double>(tx.span()) / static_cast<double>(rx.span()) - 1.0;
}

struct Residual {
  double absolute = 0.0;
  std::optional<double> percent;  // absent when the reference skew is zero
};

inline Residual residual_after_correction(double true_skew, double estimate) {
  Residual r;
  r.absolute = std::abs(true_skew - estimate);
  if (true_skew != 0.0) r.percent = 100.0 * r.absolute / std::abs(true_skew);
  return r;
}

}  // namespace skewsync
