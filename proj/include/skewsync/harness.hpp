#pragma once

// End-to-end scenarios: PAM packet -> skewed receiver -> timing recovery ->
// skew estimate -> application-layer correction, plus the file formats that
// carry scenarios, reports and packet observations.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "skewsync/bayes.hpp"
#include "skewsync/clock.hpp"
#include "skewsync/energy.hpp"
#include "skewsync/error.hpp"
#include "skewsync/phy.hpp"
#include "skewsync/skew_estimator.hpp"
#include "skewsync/timing_loop.hpp"
#include "skewsync/trace_io.hpp"

namespace skewsync {

inline constexpr double kDefaultTolerance = 0.01;

/// Loop parameters as written in a scenario; unset values are derived.
struct LoopSettings {
  double bandwidth = kDefaultLoopBandwidth;
  double damping = std::numbers::sqrt2 / 2.0;
  std::optional<double> ted_gain;  // measured when absent
  std::optional<LoopGains> gains;  // designed from (bandwidth, damping, ted_gain) when absent
  InterpolatorKind interpolator = InterpolatorKind::cubic;
  double initial_eta = 0.5;
};

struct Scenario {
  std::string label = "scenario";
  PhyConfig phy;
  LoopSettings loop;
  double hardware_skew = 0.0;
  std::optional<double> rx_phase;  // seconds; drawn from the seed when absent
  std::uint64_t seed = 1;
  std::size_t discard = kDefaultDiscard;
  double tolerance = kDefaultTolerance;
  std::optional<LinkBudgetInput> budget;
  // Application-layer tick window: a 200 Hz transmitter clock over 500 s
  // counts 1..100000.
  double tick_window_seconds = 500.0;
  double tick_rate = 200.0;
};

struct ScenarioReport {
  std::string label;
  std::uint64_t seed = 0;
  double configured_hardware_skew = 0.0;
  double rx_phase = 0.0;
  TickCount tx_ticks;
  TickCount rx_ticks;
  double app_layer_skew = 0.0;
  double phy_layer_skew = 0.0;
  double slope_per_strobe = 0.0;
  std::size_t fit_points = 0;
  std::size_t discarded_prefix = 0;
  double error_left = 0.0;  // against the application-layer skew
  std::optional<double> percent_error;
  double hardware_error = 0.0;  // against the configured skew
  std::optional<double> hardware_percent_error;
  double corrected_clock_skew = 0.0;
  std::size_t symbol_errors = 0;
  std::size_t symbols_compared = 0;
  double ted_gain = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double tolerance = kDefaultTolerance;
  bool passed = false;
  std::string trace_path;
  std::optional<EnergyReport> energy;

  bool operator==(const ScenarioReport&) const;
};

inline bool operator==(const TickCount& a, const TickCount& b) {
  return a.first_tick == b.first_tick && a.last_tick == b.last_tick;
}

inline bool operator==(const EnergyReport& a, const EnergyReport& b) {
  return std::tie(a.crlb, a.required_rate, a.n_skew_symbols, a.total_symbols, a.total_bits,
                  a.tx_energy, a.rx_energy, a.baseline_ratio) ==
         std::tie(b.crlb, b.required_rate, b.n_skew_symbols, b.total_symbols, b.total_bits,
                  b.tx_energy, b.rx_energy, b.baseline_ratio);
}

inline bool ScenarioReport::operator==(const ScenarioReport&) const = default;

struct ScenarioResult {
  ScenarioReport report;
  FractionalIntervalTrace trace;
  std::vector<double> decisions;
};

/// Raised when a scenario cannot complete; the message carries its label.
class ScenarioFailure : public Error {
 public:
  using Error::Error;
};

/// TED gain for a link, measured once per distinct pulse/loop-rate setup.
inline double ted_gain_for(const PhyConfig& phy) {
  using Key = std::tuple<double, int, int, int>;
  static std::mutex mutex;
  static std::map<Key, double> cache;
  const Key key{phy.rolloff, phy.pulse_span, phy.samples_per_symbol, phy.loop_upsampling_factor};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const double kp = measure_ted_gain(phy);
  std::lock_guard lock(mutex);
  cache.emplace(key, kp);
  return kp;
}

inline LoopConfig resolve_loop(const LoopSettings& s, const PhyConfig& phy) {
  LoopConfig cfg;
  cfg.loop_bandwidth_norm = s.bandwidth;
  cfg.damping = s.damping;
  cfg.ted_gain = s.ted_gain ? *s.ted_gain : ted_gain_for(phy);
  cfg.interpolator_kind = s.interpolator;
  cfg.initial_eta = s.initial_eta;
  const LoopGains g =
      s.gains ? *s.gains
              : design_loop_gains(s.bandwidth, s.damping, cfg.ted_gain, phy.loop_upsampling_factor);
  cfg.k1 = g.k1;
  cfg.k2 = g.k2;
  cfg.validate();
  return cfg;
}

/// Receiver sampling phase in [0, T) derived from the scenario seed.
inline double phase_from_seed(std::uint64_t seed, double symbol_period) {
  std::mt19937_64 rng(seed ^ 0x5851f42d4c957f2dULL);
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return u * symbol_period;
}

struct SymbolErrorCount {
  std::size_t errors = 0;
  std::size_t compared = 0;
  int lag = 0;
};

/// Hard decisions against the transmitted symbols after `discard` strobes.
/// Strobe k is matched to symbol k + lag, with the lag in [-3, 3] that
/// minimizes the error count.
inline SymbolErrorCount count_symbol_errors(std::span<const double> sent,
                                            std::span<const double> decided,
                                            std::size_t discard) {
  SymbolErrorCount best;
  best.errors = std::numeric_limits<std::size_t>::max();
  for (int lag = -3; lag <= 3; ++lag) {
    SymbolErrorCount c;
    c.lag = lag;
    for (std::size_t k = discard; k < decided.size(); ++k) {
      const auto idx = static_cast<std::int64_t>(k) + lag;
      if (idx < 0 || idx >= static_cast<std::int64_t>(sent.size())) continue;
      ++c.compared;
      if (decided[k] != sent[static_cast<std::size_t>(idx)]) ++c.errors;
    }
    if (c.compared > 0 && c.errors < best.errors) best = c;
  }
  if (best.errors == std::numeric_limits<std::size_t>::max()) best = {};
  return best;
}

inline ScenarioResult run_scenario(const Scenario& s) {
  try {
    s.phy.validate();
    const LoopConfig loop = resolve_loop(s.loop, s.phy);
    const auto symbols = generate_symbols(static_cast<std::size_t>(s.phy.n_symbols), s.seed);
    const double phase = s.rx_phase ? *s.rx_phase : phase_from_seed(s.seed, s.phy.symbol_period());
    const auto rx =
        synthesize_rx_samples(symbols, s.phy, s.hardware_skew, phase);
    auto recovered = run_timing_recovery(rx, s.phy, loop);
    const SkewEstimate est = estimate_skew(recovered.trace, s.discard, s.hardware_skew);

    ScenarioResult out;
    ScenarioReport& r = out.report;
    r.label = s.label;
    r.seed = s.seed;
    r.configured_hardware_skew = s.hardware_skew;
    r.rx_phase = phase;

    const ClockModel tx_clock(s.tick_rate, 0.0);
    const ClockModel rx_clock(s.tick_rate, s.hardware_skew);
    r.tx_ticks = {1, tx_clock.last_tick(s.tick_window_seconds)};
    r.rx_ticks = {1, rx_clock.last_tick(s.tick_window_seconds)};
    r.app_layer_skew = skew_from_counts(r.tx_ticks, r.rx_ticks);

    r.phy_layer_skew = est.skew;
    r.slope_per_strobe = est.slope_per_strobe;
    r.fit_points = est.n_points;
    r.discarded_prefix = est.discarded_prefix;
    const Residual app = residual_after_correction(r.app_layer_skew, est.skew);
    r.error_left = app.absolute;
    r.percent_error = app.percent;
    const Residual hw = residual_after_correction(s.hardware_skew, est.skew);
    r.hardware_error = hw.absolute;
    r.hardware_percent_error = hw.percent;
    r.corrected_clock_skew = correct_application_clock(rx_clock, est).skew;

    const auto errs = count_symbol_errors(symbols.symbols, recovered.decisions, s.discard);
    r.symbol_errors = errs.errors;
    r.symbols_compared = errs.compared;
    r.ted_gain = loop.ted_gain;
    r.k1 = loop.k1;
    r.k2 = loop.k2;
    r.tolerance = s.tolerance;
    r.passed = s.hardware_skew != 0.0 ? *hw.percent <= 100.0 * s.tolerance
                                      : std::abs(est.skew) < 1e-5;
    if (s.budget) r.energy = make_energy_report(*s.budget);

    out.trace = std::move(recovered.trace);
    out.decisions = std::move(recovered.decisions);
    return out;
  } catch (const Error& e) {
    throw ScenarioFailure(s.label + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Built-in reproduction of the eight simulated setups.

inline constexpr std::array<double, 8> kTableHardwareSkews{
    -4.9751e-3, -2.4938e-3, -1.6639e-3, -1.2484e-3, 1.2500e-3, 1.6667e-3, 2.5000e-3, 5.0000e-3};

inline std::vector<Scenario> table_scenarios() {
  static constexpr std::array<const char*, 8> numerals{"I", "II", "III", "IV", "V", "VI", "VII", "VIII"};
  std::vector<Scenario> out;
  for (std::size_t i = 0; i < kTableHardwareSkews.size(); ++i) {
    Scenario s;
    s.label = std::string("Simulation ") + numerals[i];
    s.phy = reference_phy();
    s.hardware_skew = kTableHardwareSkews[i];
    s.seed = i + 1;
    out.push_back(s);
  }
  return out;
}

struct TableRow {
  std::string label;
  double configured_skew = 0.0;
  std::optional<ScenarioResult> result;
  std::string failure;  // set when the scenario threw
  bool passed = false;
};

inline std::vector<TableRow> run_scenarios(const std::vector<Scenario>& scenarios) {
  // Warm the gain cache so the parallel runs do not all calibrate.
  for (const auto& s : scenarios)
    if (!s.loop.ted_gain) {
      try {
        ted_gain_for(s.phy);
      } catch (const Error&) {
        // reported per row below
      }
    }

  std::vector<std::future<ScenarioResult>> jobs;
  for (const auto& s : scenarios) jobs.push_back(std::async(std::launch::async, run_scenario, s));

  std::vector<TableRow> rows;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    TableRow row;
    row.label = scenarios[i].label;
    row.configured_skew = scenarios[i].hardware_skew;
    try {
      row.result = jobs[i].get();
      row.passed = row.result->report.passed;
    } catch (const Error& e) {
      row.failure = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<TableRow> reproduce_tables() { return run_scenarios(table_scenarios()); }

// ---------------------------------------------------------------------------
// Key/value files.

namespace detail {

using boost::property_tree::ptree;

inline std::string format_count(std::int64_t v) { return std::to_string(v); }

inline ptree read_ini_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open file: " + path);
  ptree pt;
  try {
    boost::property_tree::read_ini(is, pt);
  } catch (const boost::property_tree::ptree_error& e) {
    throw Error(path + ": " + e.what());
  }
  return pt;
}

inline ptree read_ini_string(const std::string& text, const std::string& name) {
  std::istringstream is(text);
  ptree pt;
  try {
    boost::property_tree::read_ini(is, pt);
  } catch (const boost::property_tree::ptree_error& e) {
    throw Error(name + ": " + e.what());
  }
  return pt;
}

inline double to_real(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw Error("key '" + key + "': expected a number, got '" + text + "'");
  }
  if (used != text.size()) throw Error("key '" + key + "': trailing characters in '" + text + "'");
  return v;
}

inline std::int64_t to_int(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    throw Error("key '" + key + "': expected an integer, got '" + text + "'");
  }
  if (used != text.size()) throw Error("key '" + key + "': trailing characters in '" + text + "'");
  return v;
}

inline bool is_absent(const std::string& text) {
  return text == "none" || text == "absent" || text.empty();
}

/// Strict reader over one ptree level: every key must be consumed.
class Section {
 public:
  Section(const ptree& node, std::string name) : node_(node), name_(std::move(name)) {}

  std::optional<std::string> text(const std::string& key) {
    seen_.push_back(key);
    if (auto v = node_.get_optional<std::string>(boost::property_tree::path(key, '\0')))
      return *v;
    return std::nullopt;
  }
  std::optional<double> real(const std::string& key) {
    auto t = text(key);
    if (!t || is_absent(*t)) return std::nullopt;
    return to_real(*t, qualified(key));
  }
  std::optional<std::int64_t> integer(const std::string& key) {
    auto t = text(key);
    if (!t || is_absent(*t)) return std::nullopt;
    return to_int(*t, qualified(key));
  }
  void finish(bool allow_children = false) const {
    for (const auto& [k, child] : node_) {
      if (!child.empty()) {
        if (allow_children) continue;
        throw Error("unexpected section [" + k + "]");
      }
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end())
        throw Error("unknown key '" + qualified(k) + "'");
    }
  }

 private:
  std::string qualified(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }
  const ptree& node_;
  std::string name_;
  std::vector<std::string> seen_;
};

inline InterpolatorKind parse_interpolator(const std::string& s) {
  if (s == "linear") return InterpolatorKind::linear;
  if (s == "piecewise_parabolic" || s == "parabolic") return InterpolatorKind::piecewise_parabolic;
  if (s == "cubic") return InterpolatorKind::cubic;
  throw Error("unknown interpolator '" + s + "'");
}

inline const char* interpolator_name(InterpolatorKind k) {
  switch (k) {
    case InterpolatorKind::linear: return "linear";
    case InterpolatorKind::piecewise_parabolic: return "piecewise_parabolic";
    default: return "cubic";
  }
}

inline const ptree& child_or_empty(const ptree& pt, const std::string& name) {
  static const ptree empty;
  auto c = pt.get_child_optional(name);
  return c ? *c : empty;
}

}  // namespace detail

/// Parses the scenario grammar: top-level keys, then optional [phy], [loop]
/// and [budget] sections. See scenarios/ for annotated examples.
inline Scenario parse_scenario(const boost::property_tree::ptree& pt) {
  Scenario s;
  detail::Section top(pt, "");
  if (auto v = top.text("label")) s.label = *v;
  if (auto v = top.integer("seed")) s.seed = static_cast<std::uint64_t>(*v);
  if (auto v = top.real("hardware_skew")) s.hardware_skew = *v;
  if (auto v = top.text("rx_phase"); v && *v != "random" && !detail::is_absent(*v))
    s.rx_phase = detail::to_real(*v, "rx_phase");
  if (auto v = top.integer("discard")) {
    detail::require(*v >= 0, "discard must be non-negative");
    s.discard = static_cast<std::size_t>(*v);
  }
  if (auto v = top.real("tolerance")) s.tolerance = *v;
  if (auto v = top.real("tick_window_seconds")) s.tick_window_seconds = *v;
  if (auto v = top.real("tick_rate")) s.tick_rate = *v;
  top.finish(true);

  for (const auto& [name, child] : pt)
    if (!child.empty() && name != "phy" && name != "loop" && name != "budget")
      throw Error("unexpected section [" + name + "]");

  detail::Section phy(detail::child_or_empty(pt, "phy"), "phy");
  if (auto v = phy.real("symbol_rate")) s.phy.symbol_rate = *v;
  if (auto v = phy.integer("samples_per_symbol")) s.phy.samples_per_symbol = static_cast<int>(*v);
  if (auto v = phy.real("rolloff")) s.phy.rolloff = *v;
  if (auto v = phy.integer("pulse_span")) s.phy.pulse_span = static_cast<int>(*v);
  if (auto v = phy.integer("loop_upsampling_factor"))
    s.phy.loop_upsampling_factor = static_cast<int>(*v);
  if (auto v = phy.integer("n_symbols")) s.phy.n_symbols = static_cast<int>(*v);
  s.phy.es_over_n0_db = phy.real("es_over_n0_db");
  phy.finish();

  detail::Section loop(detail::child_or_empty(pt, "loop"), "loop");
  if (auto v = loop.real("bandwidth")) s.loop.bandwidth = *v;
  if (auto v = loop.real("damping")) s.loop.damping = *v;
  if (auto v = loop.text("ted_gain"); v && *v != "auto" && !detail::is_absent(*v))
    s.loop.ted_gain = detail::to_real(*v, "loop.ted_gain");
  if (auto v = loop.text("interpolator")) s.loop.interpolator = detail::parse_interpolator(*v);
  if (auto v = loop.real("initial_eta")) s.loop.initial_eta = *v;
  auto k1 = loop.real("k1");
  auto k2 = loop.real("k2");
  if (k1.has_value() != k2.has_value()) throw Error("loop.k1 and loop.k2 must be given together");
  if (k1) s.loop.gains = LoopGains{*k1, *k2};
  loop.finish();

  if (auto b = pt.get_child_optional("budget")) {
    detail::Section budget(*b, "budget");
    LinkBudgetInput in;
    if (auto v = budget.real("xi")) in.xi = *v;
    if (auto v = budget.real("es_over_n0_db")) in.es_over_n0 = std::pow(10.0, *v / 10.0);
    if (auto v = budget.real("crlb_target")) in.crlb_target = *v;
    if (auto v = budget.real("transmission_time")) in.transmission_time = *v;
    if (auto v = budget.integer("phase_symbols")) in.phase_symbols = static_cast<std::uint64_t>(*v);
    if (auto v = budget.integer("samples_per_symbol"))
      in.samples_per_symbol = static_cast<std::uint64_t>(*v);
    if (auto v = budget.integer("bits_per_sample")) in.bits_per_sample = static_cast<std::uint64_t>(*v);
    if (auto v = budget.real("distance_m")) in.distance_m = *v;
    if (auto v = budget.real("circuit_energy_per_bit")) in.circuit_energy_per_bit = *v;
    if (auto v = budget.real("amp_gain")) in.amp_gain = *v;
    budget.finish();
    in.validate();
    s.budget = in;
  }

  s.phy.validate();
  return s;
}

inline Scenario parse_scenario_text(const std::string& text, const std::string& name = "<scenario>") {
  try {
    return parse_scenario(detail::read_ini_string(text, name));
  } catch (const Error& e) {
    throw Error(name + ": " + e.what());
  }
}

inline Scenario load_scenario(const std::string& path) {
  const auto pt = detail::read_ini_file(path);
  try {
    return parse_scenario(pt);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Reports: flat `key=value` lines, one per reported quantity.

inline void write_report(std::ostream& os, const ScenarioReport& r) {
  using detail::format_real;
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string("absent"); };
  boost::property_tree::ptree pt;
  auto put = [&pt](const std::string& k, const std::string& v) {
    pt.put(boost::property_tree::path(k, '\0'), v);
  };
  put("label", r.label);
  put("seed", std::to_string(r.seed));
  put("configured_hardware_skew", format_real(r.configured_hardware_skew));
  put("rx_phase", format_real(r.rx_phase));
  put("tx_first_tick", detail::format_count(r.tx_ticks.first_tick));
  put("tx_last_tick", detail::format_count(r.tx_ticks.last_tick));
  put("rx_first_tick", detail::format_count(r.rx_ticks.first_tick));
  put("rx_last_tick", detail::format_count(r.rx_ticks.last_tick));
  put("app_layer_skew", format_real(r.app_layer_skew));
  put("phy_layer_skew", format_real(r.phy_layer_skew));
  put("slope_per_strobe", format_real(r.slope_per_strobe));
  put("fit_points", std::to_string(r.fit_points));
  put("discarded_prefix", std::to_string(r.discarded_prefix));
  put("error_left", format_real(r.error_left));
  put("percent_error", opt(r.percent_error));
  put("hardware_error", format_real(r.hardware_error));
  put("hardware_percent_error", opt(r.hardware_percent_error));
  put("corrected_clock_skew", format_real(r.corrected_clock_skew));
  put("symbol_errors", std::to_string(r.symbol_errors));
  put("symbols_compared", std::to_string(r.symbols_compared));
  put("ted_gain", format_real(r.ted_gain));
  put("k1", format_real(r.k1));
  put("k2", format_real(r.k2));
  put("tolerance", format_real(r.tolerance));
  put("passed", r.passed ? "true" : "false");
  put("trace_path", r.trace_path.empty() ? "none" : r.trace_path);
  if (r.energy) {
    const auto& e = *r.energy;
    put("energy_crlb", format_real(e.crlb));
    put("energy_required_rate", format_real(e.required_rate));
    put("energy_skew_symbols", std::to_string(e.n_skew_symbols));
    put("energy_total_symbols", std::to_string(e.total_symbols));
    put("energy_total_bits", std::to_string(e.total_bits));
    put("energy_tx_joules", format_real(e.tx_energy));
    put("energy_rx_joules", format_real(e.rx_energy));
    put("energy_baseline_ratio", format_real(e.baseline_ratio));
  }
  boost::property_tree::write_ini(os, pt);
}

inline ScenarioReport parse_report(const boost::property_tree::ptree& pt) {
  detail::Section s(pt, "");
  auto req = [&s](const std::string& k) {
    auto v = s.text(k);
    if (!v) throw Error("report is missing key '" + k + "'");
    return *v;
  };
  auto real = [&](const std::string& k) { return detail::to_real(req(k), k); };
  auto integer = [&](const std::string& k) { return detail::to_int(req(k), k); };
  auto count = [&](const std::string& k) { return static_cast<std::size_t>(integer(k)); };
  auto opt = [&](const std::string& k) -> std::optional<double> {
    const auto t = req(k);
    if (detail::is_absent(t)) return std::nullopt;
    return detail::to_real(t, k);
  };

  ScenarioReport r;
  r.label = req("label");
  r.seed = static_cast<std::uint64_t>(integer("seed"));
  r.configured_hardware_skew = real("configured_hardware_skew");
  r.rx_phase = real("rx_phase");
  r.tx_ticks = {integer("tx_first_tick"), integer("tx_last_tick")};
  r.rx_ticks = {integer("rx_first_tick"), integer("rx_last_tick")};
  r.app_layer_skew = real("app_layer_skew");
  r.phy_layer_skew = real("phy_layer_skew");
  r.slope_per_strobe = real("slope_per_strobe");
  r.fit_points = count("fit_points");
  r.discarded_prefix = count("discarded_prefix");
  r.error_left = real("error_left");
  r.percent_error = opt("percent_error");
  r.hardware_error = real("hardware_error");
  r.hardware_percent_error = opt("hardware_percent_error");
  r.corrected_clock_skew = real("corrected_clock_skew");
  r.symbol_errors = count("symbol_errors");
  r.symbols_compared = count("symbols_compared");
  r.ted_gain = real("ted_gain");
  r.k1 = real("k1");
  r.k2 = real("k2");
  r.tolerance = real("tolerance");
  const auto passed = req("passed");
  if (passed != "true" && passed != "false") throw Error("report key 'passed' must be true or false");
  r.passed = passed == "true";
  if (auto t = req("trace_path"); t != "none") r.trace_path = t;
  if (pt.get_optional<std::string>("energy_crlb")) {
    EnergyReport e;
    e.crlb = real("energy_crlb");
    e.required_rate = real("energy_required_rate");
    e.n_skew_symbols = static_cast<std::uint64_t>(integer("energy_skew_symbols"));
    e.total_symbols = static_cast<std::uint64_t>(integer("energy_total_symbols"));
    e.total_bits = static_cast<std::uint64_t>(integer("energy_total_bits"));
    e.tx_energy = real("energy_tx_joules");
    e.rx_energy = real("energy_rx_joules");
    e.baseline_ratio = real("energy_baseline_ratio");
    r.energy = e;
  }
  s.finish();
  return r;
}

inline ScenarioReport read_report(const std::string& path) {
  const auto pt = detail::read_ini_file(path);
  try {
    return parse_report(pt);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

/// File-name stem for a label: lower case, runs of other characters become '_'.
inline std::string slug(const std::string& label) {
  std::string out;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!out.empty() && out.back() != '_') out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "scenario" : out;
}

struct ExportedFiles {
  std::filesystem::path report;
  std::filesystem::path trace;
};

/// Writes `<dir>/<slug>.report` and its companion `<slug>.trace.csv`. The
/// report records the trace by file name, relative to the report.
inline ExportedFiles export_report(ScenarioResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  const std::string stem = slug(result.report.label);
  ExportedFiles files{dir / (stem + ".report"), dir / (stem + ".trace.csv")};
  result.report.trace_path = files.trace.filename().string();
  write_trace_csv(files.trace.string(), result.trace);
  std::ofstream os(files.report, std::ios::binary);
  if (!os) throw Error("cannot open report file for writing: " + files.report.string());
  write_report(os, result.report);
  if (!os) throw Error("failed writing report file: " + files.report.string());
  return files;
}

// ---------------------------------------------------------------------------
// Packet observations for multi-packet fusion.

struct ObservationFile {
  std::vector<double> values;  // empty: use the per-trace estimates
  std::optional<double> noise_variance;
  int loop_samples_per_symbol = 2;
  std::size_t discard = kDefaultDiscard;
  PriorVarianceMode variance_mode = PriorVarianceMode::verbatim;
};

inline ObservationFile parse_observations(const boost::property_tree::ptree& pt) {
  ObservationFile o;
  detail::Section s(pt, "");
  if (auto v = s.text("values"); v && !detail::is_absent(*v)) {
    std::istringstream is(*v);
    std::string item;
    while (std::getline(is, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      if (b == std::string::npos) continue;
      o.values.push_back(detail::to_real(item.substr(b, e - b + 1), "values"));
    }
  }
  o.noise_variance = s.real("noise_variance");
  if (auto v = s.integer("loop_samples_per_symbol")) o.loop_samples_per_symbol = static_cast<int>(*v);
  if (auto v = s.integer("discard")) {
    detail::require(*v >= 0, "discard must be non-negative");
    o.discard = static_cast<std::size_t>(*v);
  }
  if (auto v = s.text("variance_mode")) {
    if (*v == "verbatim") o.variance_mode = PriorVarianceMode::verbatim;
    else if (*v == "residual") o.variance_mode = PriorVarianceMode::residual;
    else throw Error("variance_mode must be 'verbatim' or 'residual'");
  }
  s.finish();
  detail::require(o.loop_samples_per_symbol >= 1, "loop_samples_per_symbol must be at least 1");
  return o;
}

inline ObservationFile load_observations(const std::string& path) {
  const auto pt = detail::read_ini_file(path);
  try {
    return parse_observations(pt);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace skewsync
