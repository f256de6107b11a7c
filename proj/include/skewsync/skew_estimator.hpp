#pragma once

// Physical-layer skew from the fractional-interval trace, and the
// application-layer correction that consumes it.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "skewsync/clock.hpp"
#include "skewsync/error.hpp"
#include "skewsync/timing_loop.hpp"

namespace skewsync {

inline constexpr std::size_t kDefaultDiscard = 500;

/// Removes the modulo-1 wraps from a fractional-interval sequence. Valid
/// while the true ramp moves by less than half a sample per entry.
inline std::vector<double> unwrap_mu(std::span<const double> mu) {
  std::vector<double> out;
  out.reserve(mu.size());
  double offset = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (i > 0) {
      const double jump = mu[i] - mu[i - 1];
      if (jump > 0.5) offset -= 1.0;
      else if (jump < -0.5) offset += 1.0;
    }
    out.push_back(mu[i] + offset);
  }
  return out;
}

inline std::vector<double> trace_mu(const FractionalIntervalTrace& trace, std::size_t discard = 0) {
  std::vector<double> mu;
  if (discard >= trace.entries.size()) return mu;
  mu.reserve(trace.entries.size() - discard);
  for (std::size_t i = discard; i < trace.entries.size(); ++i) mu.push_back(trace.entries[i].mu);
  return mu;
}

inline std::vector<double> unwrap_mu(const FractionalIntervalTrace& trace) {
  return unwrap_mu(trace_mu(trace));
}

/// Closed-form least-squares slope of y against n = 0..N-1:
///   -6/(N(N+1)) sum y + 12/(N(N^2-1)) sum n y
inline double ls_slope(std::span<const double> y) {
  detail::require(y.size() >= 2, "least-squares slope needs at least two points");
  const double n = static_cast<double>(y.size());
  double sum = 0.0, weighted = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sum += y[i];
    weighted += static_cast<double>(i) * y[i];
  }
  return -6.0 / (n * (n + 1.0)) * sum + 12.0 / (n * (n * n - 1.0)) * weighted;
}

struct SkewEstimate {
  double slope_per_strobe = 0.0;
  double skew = 0.0;
  std::size_t n_points = 0;
  std::size_t discarded_prefix = 0;
  std::optional<Residual> residual_vs_truth;
};

inline SkewEstimate estimate_skew(const FractionalIntervalTrace& trace,
                                  std::size_t discard = kDefaultDiscard,
                                  std::optional<double> configured_skew = std::nullopt) {
  detail::require(trace.entries.size() > discard + 2,
                  "trace too short for the requested discard");
  detail::require(trace.loop_samples_per_symbol >= 1, "trace has no loop rate");
  const auto y = unwrap_mu(trace_mu(trace, discard));
  SkewEstimate est;
  est.slope_per_strobe = ls_slope(y);
  est.skew = est.slope_per_strobe / trace.loop_samples_per_symbol;
  est.n_points = y.size();
  est.discarded_prefix = discard;
  if (configured_skew) est.residual_vs_truth = residual_after_correction(*configured_skew, est.skew);
  return est;
}

/// Receiver clock with its tick rate scaled by (1 + estimated skew).
inline ClockModel correct_application_clock(const ClockModel& clock, const SkewEstimate& est) {
  detail::require(std::isfinite(est.skew) && std::abs(est.skew) < 0.1, "invalid skew estimate");
  ClockModel corrected = clock;
  corrected.skew = (1.0 + clock.skew) / (1.0 + est.skew) - 1.0;
  return corrected;
}

}  // namespace skewsync
