#pragma once

// Closed-form link budget for one cross-layer packet: the Cramer-Rao bound on
// skew, the symbol and bit count needed to reach it, and first-order radio
// transmit/receive energy.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>

#include "skewsync/error.hpp"

namespace skewsync {

/// 1 / (2 sqrt(2) pi), printed to four places as 0.1125.
inline constexpr double kSymbolCountCoefficient =
    1.0 / (2.0 * std::numbers::sqrt2 * std::numbers::pi);

inline constexpr double kDefaultCircuitEnergyPerBit = 50e-9;  // J/bit
inline constexpr double kDefaultAmpGain = 100e-12;            // J/bit/m^2

struct LinkBudgetInput {
  double xi = 1.0;  // loop parameter
  double es_over_n0 = 1.0;  // linear
  double crlb_target = 1e-12;
  double transmission_time = 1.0;  // seconds
  std::uint64_t phase_symbols = 0;
  std::uint64_t samples_per_symbol = 1;  // alpha
  std::uint64_t bits_per_sample = 1;     // beta
  double distance_m = 0.0;
  double circuit_energy_per_bit = kDefaultCircuitEnergyPerBit;
  double amp_gain = kDefaultAmpGain;

  void validate() const {
    detail::require(xi > 0.0 && es_over_n0 > 0.0 && crlb_target > 0.0 && transmission_time > 0.0,
                    "link budget inputs must be positive");
    detail::require(samples_per_symbol >= 1 && bits_per_sample >= 1,
                    "samples per symbol and bits per sample must be at least 1");
    detail::require(distance_m >= 0.0, "distance must be non-negative");
    detail::require(circuit_energy_per_bit > 0.0 && amp_gain > 0.0,
                    "radio energy constants must be positive");
  }
};

inline double crlb_skew(double xi, double rate, double es_over_n0) {
  detail::require(xi > 0.0 && rate > 0.0 && es_over_n0 > 0.0, "CRLB inputs must be positive");
  constexpr double pi = std::numbers::pi;
  return 1.0 / (8.0 * pi * pi * xi * rate * rate) / es_over_n0;
}

/// Symbol rate at which the bound equals `crlb_target`.
inline double required_rate(double xi, double crlb_target, double es_over_n0) {
  detail::require(xi > 0.0 && crlb_target > 0.0 && es_over_n0 > 0.0,
                  "rate inputs must be positive");
  constexpr double pi = std::numbers::pi;
  return std::sqrt(1.0 / (8.0 * pi * pi * xi * crlb_target) / es_over_n0);
}

inline double required_symbols(double transmission_time, double xi, double crlb_target,
                               double es_over_n0) {
  detail::require(transmission_time > 0.0, "transmission time must be positive");
  detail::require(xi > 0.0 && crlb_target > 0.0 && es_over_n0 > 0.0,
                  "symbol-count inputs must be positive");
  return kSymbolCountCoefficient * transmission_time *
         std::sqrt(1.0 / (xi * crlb_target) / es_over_n0);
}

struct PacketTotals {
  std::uint64_t symbols = 0;
  std::uint64_t bits = 0;
};

inline PacketTotals packet_totals(std::uint64_t n_skew_symbols, std::uint64_t phase_symbols,
                                  std::uint64_t alpha, std::uint64_t beta) {
  detail::require(alpha >= 1 && beta >= 1, "alpha and beta must be at least 1");
  const std::uint64_t ts = n_skew_symbols + phase_symbols;
  return {ts, alpha * beta * ts};
}

inline double tx_energy(double total_bits, double distance_m,
                        double e_c = kDefaultCircuitEnergyPerBit, double epsilon = kDefaultAmpGain) {
  detail::require(total_bits >= 0.0 && distance_m >= 0.0 && e_c >= 0.0 && epsilon >= 0.0,
                  "energy inputs must be non-negative");
  return e_c * total_bits + epsilon * total_bits * distance_m * distance_m;
}

inline double rx_energy(double total_bits, double e_c = kDefaultCircuitEnergyPerBit) {
  detail::require(total_bits >= 0.0 && e_c >= 0.0, "energy inputs must be non-negative");
  return e_c * total_bits;
}

struct BaselineComparison {
  double proposed_tx = 0.0;
  double proposed_rx = 0.0;
  double baseline_tx = 0.0;  // summed over all baseline packets
  double baseline_rx = 0.0;
  std::uint64_t baseline_packets = 2;
  double ratio = 0.0;  // proposed / baseline
};

/// One proposed packet against `baseline_packets` timestamp packets of
/// `baseline_bits` each, both sent over the same distance.
inline BaselineComparison compare_energy(double proposed_bits, double baseline_bits,
                                         std::uint64_t baseline_packets, double distance_m,
                                         double e_c = kDefaultCircuitEnergyPerBit,
                                         double epsilon = kDefaultAmpGain) {
  detail::require(baseline_packets >= 2, "an application-layer baseline needs at least two packets");
  BaselineComparison c;
  c.baseline_packets = baseline_packets;
  c.proposed_tx = tx_energy(proposed_bits, distance_m, e_c, epsilon);
  c.proposed_rx = rx_energy(proposed_bits, e_c);
  const auto k = static_cast<double>(baseline_packets);
  c.baseline_tx = k * tx_energy(baseline_bits, distance_m, e_c, epsilon);
  c.baseline_rx = k * rx_energy(baseline_bits, e_c);
  c.ratio = (c.proposed_tx + c.proposed_rx) / (c.baseline_tx + c.baseline_rx);
  return c;
}

struct EnergyReport {
  double crlb = 0.0;
  double required_rate = 0.0;
  std::uint64_t n_skew_symbols = 0;
  std::uint64_t total_symbols = 0;
  std::uint64_t total_bits = 0;
  double tx_energy = 0.0;
  double rx_energy = 0.0;
  double baseline_ratio = 0.0;
};

inline EnergyReport make_energy_report(const LinkBudgetInput& in, std::uint64_t baseline_packets = 2,
                                       std::optional<double> baseline_bits = std::nullopt) {
  in.validate();
  EnergyReport r;
  r.required_rate = required_rate(in.xi, in.crlb_target, in.es_over_n0);
  r.crlb = crlb_skew(in.xi, r.required_rate, in.es_over_n0);
  r.n_skew_symbols = static_cast<std::uint64_t>(
      std::ceil(required_symbols(in.transmission_time, in.xi, in.crlb_target, in.es_over_n0)));
  const auto totals =
      packet_totals(r.n_skew_symbols, in.phase_symbols, in.samples_per_symbol, in.bits_per_sample);
  r.total_symbols = totals.symbols;
  r.total_bits = totals.bits;
  const auto bits = static_cast<double>(totals.bits);
  r.tx_energy = tx_energy(bits, in.distance_m, in.circuit_energy_per_bit, in.amp_gain);
  r.rx_energy = rx_energy(bits, in.circuit_energy_per_bit);
  r.baseline_ratio = compare_energy(bits, baseline_bits.value_or(bits), baseline_packets,
                                    in.distance_m, in.circuit_energy_per_bit, in.amp_gain)
                         .ratio;
  return r;
}

inline BaselineComparison compare_with_baseline(const LinkBudgetInput& in,
                                                std::uint64_t baseline_packets = 2,
                                                std::optional<double> baseline_bits = std::nullopt) {
  const auto r = make_energy_report(in, baseline_packets, baseline_bits);
  const auto bits = static_cast<double>(r.total_bits);
  return compare_energy(bits, baseline_bits.value_or(bits), baseline_packets, in.distance_m,
                        in.circuit_energy_per_bit, in.amp_gain);
}

}  // namespace skewsync
