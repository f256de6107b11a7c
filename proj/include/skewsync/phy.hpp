#pragma once

// Binary PAM transmit waveform and receiver sampling under a skewed clock.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "skewsync/error.hpp"

namespace skewsync {

struct PhyConfig {
  double symbol_rate = 1000.0;     // symbols per second
  int samples_per_symbol = 8;      // front-end rate
  double rolloff = 0.5;            // SRRC excess bandwidth
  int pulse_span = 10;             // SRRC half-width in symbols
  int loop_upsampling_factor = 2;  // samples per symbol inside the timing loop
  int n_symbols = 3000;
  std::optional<double> es_over_n0_db;  // absent means noiseless

  double symbol_period() const { return 1.0 / symbol_rate; }
  double sample_period() const { return symbol_period() / samples_per_symbol; }
  int decimation() const { return samples_per_symbol / loop_upsampling_factor; }

  void validate() const {
    detail::require(symbol_rate > 0.0 && std::isfinite(symbol_rate), "symbol rate must be positive");
    detail::require(samples_per_symbol >= 2, "samples per symbol must be at least 2");
    detail::require(rolloff > 0.0 && rolloff <= 1.0, "rolloff must lie in (0, 1]");
    detail::require(pulse_span >= 4, "pulse span must be at least 4 symbols");
    detail::require(loop_upsampling_factor >= 1, "loop upsampling factor must be at least 1");
    detail::require(samples_per_symbol % loop_upsampling_factor == 0,
                    "samples per symbol must be divisible by the loop upsampling factor");
    detail::require(n_symbols > 10 * pulse_span, "packet must exceed ten pulse spans");
  }
};

/// Reference link: 1000 sym/s binary PAM, 8 samples/symbol, 50% SRRC,
/// two samples per symbol in the loop, 3000-symbol packet.
inline PhyConfig reference_phy() { return PhyConfig{}; }

struct SymbolSequence {
  std::vector<double> symbols;  // each exactly +1 or -1
  std::uint64_t seed = 0;
};

struct SampleStream {
  std::vector<double> samples;
  double sample_rate = 0.0;
};

inline SymbolSequence generate_symbols(std::size_t n, std::uint64_t seed) {
  detail::require(n > 0, "symbol count must be positive");
  std::mt19937_64 rng(seed);
  SymbolSequence seq;
  seq.seed = seed;
  seq.symbols.reserve(n);
  for (std::size_t i = 0; i < n; ++i) seq.symbols.push_back((rng() >> 63) ? 1.0 : -1.0);
  return seq;
}

/// Square-root raised-cosine impulse response (not normalized), t in symbol periods.
inline double srrc_pulse(double t, double beta) {
  constexpr double pi = std::numbers::pi;
  constexpr double eps = 1e-9;
  if (std::abs(t) < eps) return 1.0 - beta + 4.0 * beta / pi;
  if (std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < eps) {
    const double a = pi / (4.0 * beta);
    return beta / std::numbers::sqrt2 *
           ((1.0 + 2.0 / pi) * std::sin(a) + (1.0 - 2.0 / pi) * std::cos(a));
  }
  const double x = 4.0 * beta * t;
  return (std::sin(pi * t * (1.0 - beta)) + x * std::cos(pi * t * (1.0 + beta))) /
         (pi * t * (1.0 - x * x));
}

namespace detail {

inline double srrc_scale(double beta, int span, int sps) {
  double energy = 0.0;
  for (int k = -span * sps; k <= span * sps; ++k) {
    const double p = srrc_pulse(static_cast<double>(k) / sps, beta);
    energy += p * p;
  }
  return 1.0 / std::sqrt(energy);
}

}  // namespace detail

/// Odd-length, symmetric, unit-energy SRRC taps spanning +/- `span` symbols.
inline std::vector<double> srrc_taps(double rolloff, int span, int samples_per_symbol) {
  detail::require(rolloff > 0.0 && rolloff <= 1.0, "rolloff must lie in (0, 1]");
  detail::require(span >= 4, "pulse span must be at least 4 symbols");
  detail::require(samples_per_symbol >= 2, "samples per symbol must be at least 2");
  const double scale = detail::srrc_scale(rolloff, span, samples_per_symbol);
  std::vector<double> taps;
  taps.reserve(2 * span * samples_per_symbol + 1);
  for (int k = -span * samples_per_symbol; k <= span * samples_per_symbol; ++k)
    taps.push_back(scale * srrc_pulse(static_cast<double>(k) / samples_per_symbol, rolloff));
  return taps;
}

namespace detail {

/// Continuous-time transmit pulse train. Pulse m is centred at (m + span) T,
/// so the packet occupies [0, (n + 2 span) T).
class PulseTrain {
 public:
  PulseTrain(std::span<const double> symbols, const PhyConfig& cfg)
      : symbols_(symbols),
        beta_(cfg.rolloff),
        span_(cfg.pulse_span),
        period_(cfg.symbol_period()),
        scale_(srrc_scale(cfg.rolloff, cfg.pulse_span, cfg.samples_per_symbol)) {}

  double duration() const {
    return (static_cast<double>(symbols_.size()) + 2.0 * span_) * period_;
  }

  double operator()(double t) const {
    const double u = t / period_ - span_;  // time in symbols relative to pulse 0
    const auto lo = static_cast<long>(std::ceil(u - span_ - 1e-12));
    const auto hi = static_cast<long>(std::floor(u + span_ + 1e-12));
    const long n = static_cast<long>(symbols_.size());
    double acc = 0.0;
    for (long m = std::max(lo, 0L); m <= std::min(hi, n - 1); ++m)
      acc += symbols_[static_cast<std::size_t>(m)] * srrc_pulse(u - static_cast<double>(m), beta_);
    return scale_ * acc;
  }

 private:
  std::span<const double> symbols_;
  double beta_;
  int span_;
  double period_;
  double scale_;
};

}  // namespace detail

/// Receiver samples of the SRRC pulse train taken by a clock with the given
/// skew and phase: t_k = (k Ts + rx_phase)(1 + rx_skew), for every t_k inside
/// the packet window. Optional white Gaussian noise sets the per-symbol SNR.
inline SampleStream synthesize_rx_samples(const SymbolSequence& symbols, const PhyConfig& cfg,
                                          double rx_skew, double rx_phase,
                                          std::optional<std::uint64_t> noise_seed = std::nullopt) {
  cfg.validate();
  detail::require(!symbols.symbols.empty(), "symbol sequence is empty");
  detail::require(std::abs(rx_skew) < 0.1, "receiver skew magnitude must be below 0.1");
  detail::require(std::abs(rx_phase) < cfg.symbol_period(),
                  "receiver phase must be within one symbol period");

  const detail::PulseTrain train(symbols.symbols, cfg);
  const double ts = cfg.sample_period();
  const double end = train.duration();

  SampleStream out;
  out.sample_rate = 1.0 / ts;
  for (std::size_t k = 0;; ++k) {
    const double t = (static_cast<double>(k) * ts + rx_phase) * (1.0 + rx_skew);
    if (t >= end) break;
    out.samples.push_back(train(t));
  }

  if (cfg.es_over_n0_db) {
    // Unit-energy pulses carry Es = 1 per symbol in the sample domain; for a
    // real channel N0/2 is the per-sample noise variance.
    const double esn0 = std::pow(10.0, *cfg.es_over_n0_db / 10.0);
    const double sigma = std::sqrt(1.0 / (2.0 * esn0));
    std::mt19937_64 rng(noise_seed.value_or(symbols.seed ^ 0x9e3779b97f4a7c15ULL));
    std::normal_distribution<double> gauss(0.0, sigma);
    for (double& s : out.samples) s += gauss(rng);
  }
  return out;
}

}  // namespace skewsync
