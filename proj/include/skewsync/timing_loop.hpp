#pragma once

// Feedback symbol timing recovery: matched filter, polynomial interpolator,
// zero-crossing timing error detector, proportional-plus-integrator loop
// filter and a modulo-1 decrementing interpolation-control counter.
//
// The loop runs at `loop_upsampling_factor` samples per symbol. On every
// counter underflow (a strobe) the loop emits one fractional-interval record.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "skewsync/error.hpp"
#include "skewsync/phy.hpp"

namespace skewsync {

enum class InterpolatorKind { linear, piecewise_parabolic, cubic };

struct LoopState {
  double eta = 0.5;         // modulo-1 counter, in [0, 1)
  double integrator = 0.0;  // loop-filter accumulator
  double mu = 0.0;          // fractional interval past the base point, in [0, 1)
  bool strobe = false;
  double last_decision = 1.0;
};

/// Raised when the control word goes non-positive or strobes stop arriving.
class LoopDivergence : public Error {
 public:
  LoopDivergence(const std::string& what, LoopState state, std::int64_t cycle)
      : Error(describe(what, state, cycle)), state_(state), cycle_(cycle) {}

  const LoopState& state() const { return state_; }
  std::int64_t cycle() const { return cycle_; }

 private:
  static std::string describe(const std::string& what, const LoopState& s, std::int64_t cycle) {
    std::ostringstream os;
    os << "timing loop diverged at cycle " << cycle << ": " << what << " (eta=" << s.eta
       << ", integrator=" << s.integrator << ", mu=" << s.mu << ")";
    return os.str();
  }

  LoopState state_;
  std::int64_t cycle_;
};

/// BnT normalized to the symbol rate. Narrower loops slip cycles on short
/// packets with skews in the per-mille range.
inline constexpr double kDefaultLoopBandwidth = 0.02;

struct LoopConfig {
  double loop_bandwidth_norm = kDefaultLoopBandwidth;
  double damping = std::numbers::sqrt2 / 2.0;
  double ted_gain = 1.0;  // slope of the TED S-curve at the origin, per symbol of offset
  double k1 = 0.0;        // proportional gain
  double k2 = 0.0;        // integrator gain
  InterpolatorKind interpolator_kind = InterpolatorKind::cubic;
  double initial_eta = 0.5;

  void validate() const {
    detail::require(loop_bandwidth_norm > 0.0 && loop_bandwidth_norm <= 0.1,
                    "loop bandwidth must lie in (0, 0.1]");
    detail::require(damping > 0.0, "damping must be positive");
    detail::require(std::isfinite(k1) && std::isfinite(k2), "loop gains must be finite");
    detail::require(initial_eta >= 0.0 && initial_eta < 1.0, "initial counter value must lie in [0, 1)");
  }
};

struct TraceEntry {
  std::int64_t cycle = 0;
  std::int64_t basepoint = 0;
  double mu = 0.0;
  double ted_error = 0.0;
  double loop_out = 0.0;

  bool operator==(const TraceEntry&) const = default;
};

/// Per-strobe record of the interpolation control.
///
/// Entries use the lag convention: the strobe instant lies `mu` loop samples
/// before loop sample `basepoint`. A receiver whose clock has skew tau then
/// produces a fractional interval that ramps by L tau / (1 + tau) per strobe,
/// where L is `loop_samples_per_symbol`.
struct FractionalIntervalTrace {
  std::vector<TraceEntry> entries;
  int loop_samples_per_symbol = 2;

  std::size_t size() const { return entries.size(); }
  bool operator==(const FractionalIntervalTrace&) const = default;
};

/// Full convolution with the (symmetric) taps, keeping every `decimation`-th
/// output starting at index 0.
inline SampleStream matched_filter(const SampleStream& rx, std::span<const double> taps,
                                   int decimation = 1) {
  detail::require(!rx.samples.empty(), "matched filter input is empty");
  detail::require(!taps.empty(), "matched filter taps are empty");
  detail::require(decimation >= 1, "decimation must be at least 1");

  const std::size_t n = rx.samples.size();
  const std::size_t m = taps.size();
  const std::size_t full = n + m - 1;
  SampleStream out;
  out.sample_rate = rx.sample_rate / decimation;
  out.samples.reserve(full / decimation + 1);
  for (std::size_t k = 0; k < full; k += static_cast<std::size_t>(decimation)) {
    const std::size_t j_lo = k >= n ? k - n + 1 : 0;
    const std::size_t j_hi = std::min(k, m - 1);
    double acc = 0.0;
    for (std::size_t j = j_lo; j <= j_hi; ++j) acc += taps[m - 1 - j] * rx.samples[k - j];
    out.samples.push_back(acc);
  }
  return out;
}

/// Interpolant at `mu` past window[1] (the base point) from four consecutive samples.
inline double interpolate(std::span<const double, 4> w, double mu,
                          InterpolatorKind kind = InterpolatorKind::cubic) {
  switch (kind) {
    case InterpolatorKind::linear:
      return w[1] + mu * (w[2] - w[1]);
    case InterpolatorKind::piecewise_parabolic: {
      constexpr double a = 0.5;
      const double v2 = a * (w[3] - w[2] - w[1] + w[0]);
      const double v1 = -a * w[3] + (1.0 + a) * w[2] - (1.0 - a) * w[1] - a * w[0];
      return (v2 * mu + v1) * mu + w[1];
    }
    case InterpolatorKind::cubic:
    default: {
      // Lagrange cubic through offsets -1, 0, 1, 2, in Farrow form.
      const double v3 = (w[3] - w[0]) / 6.0 + (w[1] - w[2]) / 2.0;
      const double v2 = (w[0] + w[2]) / 2.0 - w[1];
      const double v1 = w[2] - w[1] / 2.0 - w[0] / 3.0 - w[3] / 6.0;
      return ((v3 * mu + v2) * mu + v1) * mu + w[1];
    }
  }
}

/// Zero-crossing TED. Positive when sampling early, zero without a transition.
inline double zc_ted(double midpoint, double prev_decision, double curr_decision) {
  return midpoint * (prev_decision - curr_decision) / 2.0;
}

inline double loop_filter_step(LoopState& state, double e, double k1, double k2) {
  state.integrator += k2 * e;
  return k1 * e + state.integrator;
}

/// One decrement of the modulo-1 counter with control word W = 1/L + v.
inline bool interpolation_control_step(LoopState& state, double v, int loop_sps) {
  detail::require(loop_sps >= 1, "loop samples per symbol must be at least 1");
  const double w = 1.0 / loop_sps + v;
  if (!(w > 0.0)) throw LoopDivergence("control word W <= 0", state, -1);
  const double next = state.eta - w;
  state.strobe = next < 0.0;
  if (state.strobe) {
    state.mu = state.eta / w;
    state.eta = next - std::floor(next);
    if (state.eta >= 1.0) state.eta = 0.0;
  } else {
    state.eta = next;
  }
  return state.strobe;
}

struct LoopGains {
  double k1 = 0.0;
  double k2 = 0.0;
};

/// Second-order PLL gains for a PI filter driving a counter of gain -1.
/// `bnt` is normalized to the symbol rate; the design runs per loop sample.
inline LoopGains design_loop_gains(double bnt, double zeta, double kp, int loop_sps) {
  detail::require(bnt > 0.0 && bnt <= 0.1, "loop bandwidth must lie in (0, 0.1]");
  detail::require(zeta > 0.0, "damping must be positive");
  detail::require(kp > 0.0, "TED gain must be positive");
  detail::require(loop_sps >= 1, "loop samples per symbol must be at least 1");
  constexpr double counter_gain = -1.0;
  const double theta = (bnt / loop_sps) / (zeta + 1.0 / (4.0 * zeta));
  const double denom = 1.0 + 2.0 * zeta * theta + theta * theta;
  return {4.0 * zeta * theta / denom / (kp * counter_gain),
          4.0 * theta * theta / denom / (kp * counter_gain)};
}

inline LoopConfig make_loop_config(double bnt, double zeta, double kp, int loop_sps,
                                   InterpolatorKind kind = InterpolatorKind::cubic) {
  LoopConfig cfg;
  cfg.loop_bandwidth_norm = bnt;
  cfg.damping = zeta;
  cfg.ted_gain = kp;
  cfg.interpolator_kind = kind;
  const LoopGains g = design_loop_gains(bnt, zeta, kp, loop_sps);
  cfg.k1 = g.k1;
  cfg.k2 = g.k2;
  return cfg;
}

namespace detail {

/// Interpolant at fractional position `pos` of `x`, using a four-sample window.
inline double interpolate_at(std::span<const double> x, double pos, InterpolatorKind kind) {
  const double base = std::floor(pos);
  const auto m = static_cast<std::size_t>(base);
  return interpolate(std::span<const double, 4>(x.data() + m - 1, 4), pos - base, kind);
}

}  // namespace detail

struct SCurvePoint {
  double offset = 0.0;  // sampling lead in symbol periods (positive = early)
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

/// Open-loop TED S-curve: for every offset, sample a zero-skew packet early by
/// `offset` symbols and average the decision-directed TED output.
inline std::vector<SCurvePoint> ted_s_curve(const PhyConfig& cfg, std::span<const double> offsets,
                                            int n_symbols, std::uint64_t seed) {
  PhyConfig c = cfg;
  c.n_symbols = n_symbols;
  c.es_over_n0_db.reset();
  c.validate();
  const int loop_sps = c.loop_upsampling_factor;
  const auto taps = srrc_taps(c.rolloff, c.pulse_span, c.samples_per_symbol);
  const auto symbols = generate_symbols(static_cast<std::size_t>(n_symbols), seed);

  std::vector<SCurvePoint> curve;
  for (double offset : offsets) {
    detail::require(std::abs(offset) < 0.5, "S-curve offsets must lie in (-T/2, T/2)");
    const auto rx = synthesize_rx_samples(symbols, c, 0.0, -offset * c.symbol_period());
    const auto y = matched_filter(rx, taps, c.decimation());
    const std::span<const double> ys(y.samples);

    // Symbol m peaks at loop index (m + 2 span) L at zero offset.
    double sum = 0.0, sum_sq = 0.0, prev = 0.0;
    std::size_t count = 0;
    for (int m = c.pulse_span; m < n_symbols - c.pulse_span; ++m) {
      const double idx = static_cast<double>((m + 2 * c.pulse_span) * loop_sps);
      const double strobe = detail::interpolate_at(ys, idx, InterpolatorKind::cubic);
      const double mid =
          detail::interpolate_at(ys, idx - loop_sps / 2.0, InterpolatorKind::cubic);
      const double decision = strobe >= 0.0 ? 1.0 : -1.0;
      if (m > c.pulse_span) {
        const double e = zc_ted(mid, prev, decision);
        sum += e;
        sum_sq += e * e;
        ++count;
      }
      prev = decision;
    }
    SCurvePoint p;
    p.offset = offset;
    p.count = count;
    p.mean = sum / static_cast<double>(count);
    const double var = sum_sq / static_cast<double>(count) - p.mean * p.mean;
    p.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(count));
    curve.push_back(p);
  }
  return curve;
}

/// Slope of the TED S-curve at the origin, from a five-point least-squares fit
/// over offsets within +/- 0.1 symbol.
inline double measure_ted_gain(const PhyConfig& cfg, std::uint64_t seed = 1,
                               int n_symbols = 10000) {
  constexpr std::array<double, 5> offsets{-0.1, -0.05, 0.0, 0.05, 0.1};
  const auto curve = ted_s_curve(cfg, offsets, n_symbols, seed);
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (!(curve[i].mean > curve[i - 1].mean))
      throw Error("TED calibration failed: S-curve is not monotone near the origin");
  double sxy = 0.0, sxx = 0.0;
  for (const auto& p : curve) {
    sxy += p.offset * p.mean;
    sxx += p.offset * p.offset;
  }
  return sxy / sxx;  // offsets are symmetric about zero
}

struct TimingRecoveryResult {
  FractionalIntervalTrace trace;
  std::vector<double> decisions;
};

/// Runs the complete loop over the fully-overlapped part of the matched-filter
/// output. Strobe k yields trace entry k and decision k.
inline TimingRecoveryResult run_timing_recovery(const SampleStream& rx, const PhyConfig& cfg,
                                                const LoopConfig& loop) {
  cfg.validate();
  loop.validate();
  const int loop_sps = cfg.loop_upsampling_factor;
  const int dec = cfg.decimation();
  const auto taps = srrc_taps(cfg.rolloff, cfg.pulse_span, cfg.samples_per_symbol);
  const auto mf = matched_filter(rx, taps, dec);
  const std::span<const double> y(mf.samples);

  const auto first = static_cast<std::int64_t>((taps.size() - 1 + dec - 1) / dec);
  const auto last = static_cast<std::int64_t>((rx.samples.size() - 1) / dec);
  const std::int64_t guard = loop_sps / 2 + 2;
  const std::int64_t begin = std::max(first, guard);
  const std::int64_t end = std::min(last, static_cast<std::int64_t>(y.size()) - 3);
  detail::require(end - begin >= 4 * loop_sps, "sample stream too short for timing recovery");

  TimingRecoveryResult result;
  result.trace.loop_samples_per_symbol = loop_sps;
  result.trace.entries.reserve(static_cast<std::size_t>((end - begin) / loop_sps + 2));
  result.decisions.reserve(result.trace.entries.capacity());

  LoopState state;
  state.eta = loop.initial_eta;
  double v = 0.0;
  std::int64_t since_strobe = 0;
  for (std::int64_t n = begin; n <= end; ++n) {
    const std::int64_t cycle = n - begin;
    const double w = 1.0 / loop_sps + v;
    if (!(w > 0.0)) throw LoopDivergence("control word W <= 0", state, cycle);
    interpolation_control_step(state, v, loop_sps);

    double e = 0.0;
    if (state.strobe) {
      const double pos = static_cast<double>(n) + state.mu;
      const double strobe = detail::interpolate_at(y, pos, loop.interpolator_kind);
      const double mid = detail::interpolate_at(y, pos - loop_sps / 2.0, loop.interpolator_kind);
      const double decision = strobe >= 0.0 ? 1.0 : -1.0;
      e = zc_ted(mid, state.last_decision, decision);
      state.last_decision = decision;
      result.decisions.push_back(decision);
      since_strobe = 0;
    } else if (++since_strobe > 4 * loop_sps) {
      throw LoopDivergence("no strobe for more than four symbol periods", state, cycle);
    }

    v = loop_filter_step(state, e, loop.k1, loop.k2);

    if (state.strobe) {
      TraceEntry entry;
      entry.cycle = cycle;
      if (state.mu > 0.0) {
        entry.basepoint = n + 1;
        entry.mu = 1.0 - state.mu;
      } else {
        entry.basepoint = n;
        entry.mu = 0.0;
      }
      entry.ted_error = e;
      entry.loop_out = v;
      result.trace.entries.push_back(entry);
    }
  }
  return result;
}

}  // namespace skewsync
