#pragma once

// Gaussian-conjugate fusion of cross-layer skew observations.
//
// The prior comes from the physical-layer fractional-interval samples; N
// per-packet observations x[n] with noise variance sigma^2 update it.
//
//   posterior variance  1 / (N / sigma^2 + 1 / sigma_P^2)
//   posterior mean      (N xbar / sigma^2 + mu_P / sigma_P^2) * posterior variance
//                     = w xbar + (1 - w) mu_P,  w = sigma_P^2 / (sigma_P^2 + sigma^2 / N)
//   Bayesian MSE        sigma^2 / N * w

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "skewsync/error.hpp"
#include "skewsync/skew_estimator.hpp"

namespace skewsync {

struct SkewPrior {
  double mean = 0.0;
  double variance = 0.0;
};

struct PacketObservations {
  std::vector<double> values;
  double noise_variance = 1.0;

  std::size_t size() const { return values.size(); }
  double mean() const {
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  }
};

struct SkewPosterior {
  double mean = 0.0;
  double variance = 0.0;
};

/// How the prior variance is formed from the trace samples.
///  - verbatim: mean square of each sample minus the scalar LS slope.
///  - residual: mean square residual about the fitted line.
enum class PriorVarianceMode { verbatim, residual };

inline SkewPrior prior_from_trace(std::span<const double> samples,
                                  PriorVarianceMode mode = PriorVarianceMode::verbatim) {
  detail::require(samples.size() >= 3, "prior needs at least three trace samples");
  const double slope = ls_slope(samples);
  const double n = static_cast<double>(samples.size());
  double ss = 0.0;
  if (mode == PriorVarianceMode::verbatim) {
    for (double p : samples) ss += (p - slope) * (p - slope);
  } else {
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    const double intercept = mean - slope * (n - 1.0) / 2.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double r = samples[i] - (intercept + slope * static_cast<double>(i));
      ss += r * r;
    }
  }
  return {slope, ss / n};
}

namespace detail {

inline void check(const SkewPrior& prior, const PacketObservations& obs) {
  require(!obs.values.empty(), "no packet observations");
  require(obs.noise_variance > 0.0 && std::isfinite(obs.noise_variance),
          "observation noise variance must be positive");
  require(prior.variance >= 0.0 && !std::isnan(prior.variance), "prior variance must be non-negative");
  require(std::isfinite(prior.mean), "prior mean must be finite");
}

}  // namespace detail

struct MmseWeights {
  double observations = 0.0;  // multiplies xbar
  double prior = 0.0;         // multiplies mu_P
};

inline MmseWeights mmse_weights(double prior_variance, double noise_variance, std::size_t n) {
  if (std::isinf(prior_variance)) return {1.0, 0.0};
  const double shrunk = noise_variance / static_cast<double>(n);
  const double total = prior_variance + shrunk;
  return {prior_variance / total, shrunk / total};
}

inline SkewPosterior posterior_params(const SkewPrior& prior, const PacketObservations& obs) {
  detail::check(prior, obs);
  if (prior.variance == 0.0) return {prior.mean, 0.0};
  const double n = static_cast<double>(obs.size());
  const double precision = n / obs.noise_variance + 1.0 / prior.variance;
  const double variance = 1.0 / precision;
  return {(n * obs.mean() / obs.noise_variance + prior.mean / prior.variance) * variance, variance};
}

inline double mmse_estimate(const SkewPrior& prior, const PacketObservations& obs) {
  detail::check(prior, obs);
  const MmseWeights w = mmse_weights(prior.variance, obs.noise_variance, obs.size());
  return w.observations * obs.mean() + w.prior * prior.mean;
}

inline double bayesian_mse(const SkewPrior& prior, std::size_t n, double noise_variance) {
  detail::require(n >= 1, "need at least one packet");
  detail::require(noise_variance > 0.0, "observation noise variance must be positive");
  const double shrunk = noise_variance / static_cast<double>(n);
  if (std::isinf(prior.variance)) return shrunk;
  return shrunk * (prior.variance / (prior.variance + shrunk));
}

/// Sample variance of the per-packet estimates when there are at least three,
/// otherwise the configured fallback.
inline double default_noise_variance(std::span<const double> values, double configured) {
  if (values.size() < 3) return configured;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / (n - 1.0);
}

/// Skew-scaled, unwrapped trace samples of several packets, joined end to end.
/// Each later packet is shifted so it continues the previous one by its own
/// mean increment, leaving the common slope intact.
inline std::vector<double> stitched_trace_samples(std::span<const FractionalIntervalTrace> traces,
                                                  std::size_t discard) {
  std::vector<double> out;
  for (const auto& trace : traces) {
    detail::require(trace.entries.size() > discard + 1, "trace too short for the requested discard");
    auto seg = unwrap_mu(trace_mu(trace, discard));
    const double scale = 1.0 / trace.loop_samples_per_symbol;
    for (double& v : seg) v *= scale;
    if (!out.empty()) {
      const double step = (seg.back() - seg.front()) / static_cast<double>(seg.size() - 1);
      const double shift = out.back() + step - seg.front();
      for (double& v : seg) v += shift;
    }
    out.insert(out.end(), seg.begin(), seg.end());
  }
  return out;
}

struct FusionResult {
  double estimate = 0.0;
  double bayesian_mse = 0.0;
  SkewPrior prior;
  SkewPosterior posterior;
  double observation_mean = 0.0;
  std::size_t trace_samples = 0;
};

inline FusionResult fuse_packets(std::span<const FractionalIntervalTrace> traces,
                                 const PacketObservations& obs,
                                 std::size_t discard = kDefaultDiscard,
                                 PriorVarianceMode mode = PriorVarianceMode::verbatim) {
  detail::require(!traces.empty(), "need at least one trace");
  const auto samples = stitched_trace_samples(traces, discard);
  FusionResult r;
  r.trace_samples = samples.size();
  r.prior = prior_from_trace(samples, mode);
  r.posterior = posterior_params(r.prior, obs);
  r.estimate = mmse_estimate(r.prior, obs);
  r.bayesian_mse = bayesian_mse(r.prior, obs.size(), obs.noise_variance);
  r.observation_mean = obs.mean();
  return r;
}

}  // namespace skewsync
