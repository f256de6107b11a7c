// Command-line front end: scenario runs, table reproduction, link budget
// arithmetic and multi-packet fusion.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "skewsync/skewsync.hpp"

namespace {

using namespace skewsync;
using detail::format_real;

void print_kv(const std::string& key, const std::string& value) {
  std::cout << key << '=' << value << '\n';
}

int cmd_simulate(const std::string& path, std::optional<std::uint64_t> seed,
                 const std::string& out_dir) {
  Scenario s = load_scenario(path);
  if (seed) s.seed = *seed;
  ScenarioResult result = run_scenario(s);
  if (!out_dir.empty()) {
    const auto files = export_report(result, out_dir);
    std::cerr << "wrote " << files.report.string() << " and " << files.trace.string() << '\n';
  }
  write_report(std::cout, result.report);
  return result.report.passed ? 0 : 1;
}

int cmd_tables(const std::string& out_dir) {
  auto rows = reproduce_tables();
  bool all = true;
  std::printf("%-16s %13s %13s %13s %13s %9s %7s %s\n", "setup", "hardware", "app_layer",
              "phy_layer", "error_left", "%error", "sym_err", "status");
  for (auto& row : rows) {
    all = all && row.passed;
    if (!row.result) {
      std::printf("%-16s %13.4e %s\n", row.label.c_str(), row.configured_skew, "DIVERGED");
      std::cerr << row.failure << '\n';
      continue;
    }
    const auto& r = row.result->report;
    std::printf("%-16s %13.4e %13.4e %13.4e %13.4e %9.3f %7zu %s\n", r.label.c_str(),
                r.configured_hardware_skew, r.app_layer_skew, r.phy_layer_skew, r.error_left,
                r.percent_error.value_or(0.0), r.symbol_errors, row.passed ? "PASS" : "FAIL");
    if (!out_dir.empty()) export_report(*row.result, out_dir);
  }
  return all ? 0 : 1;
}

int cmd_crlb(double xi, double rate, double esn0_db) {
  const double esn0 = std::pow(10.0, esn0_db / 10.0);
  print_kv("xi", format_real(xi));
  print_kv("rate", format_real(rate));
  print_kv("es_over_n0_db", format_real(esn0_db));
  print_kv("crlb", format_real(crlb_skew(xi, rate, esn0)));
  return 0;
}

int cmd_energy(double bits, double distance, double ec, double eps) {
  print_kv("bits", format_real(bits));
  print_kv("distance_m", format_real(distance));
  print_kv("tx_joules", format_real(tx_energy(bits, distance, ec, eps)));
  print_kv("rx_joules", format_real(rx_energy(bits, ec)));
  return 0;
}

int cmd_fuse(const std::vector<std::string>& trace_paths, const std::string& obs_path) {
  const ObservationFile obs = load_observations(obs_path);
  std::vector<FractionalIntervalTrace> traces;
  for (const auto& p : trace_paths) traces.push_back(read_trace_csv(p, obs.loop_samples_per_symbol));

  PacketObservations packets;
  packets.values = obs.values;
  if (packets.values.empty())
    for (const auto& t : traces) packets.values.push_back(estimate_skew(t, obs.discard).skew);
  if (obs.noise_variance) {
    packets.noise_variance = *obs.noise_variance;
  } else if (packets.values.size() >= 3) {
    packets.noise_variance = default_noise_variance(packets.values, 0.0);
  } else {
    throw Error(obs_path + ": noise_variance is required with fewer than three observations");
  }

  const FusionResult r = fuse_packets(traces, packets, obs.discard, obs.variance_mode);
  print_kv("packets", std::to_string(packets.size()));
  print_kv("trace_samples", std::to_string(r.trace_samples));
  print_kv("observation_mean", format_real(r.observation_mean));
  print_kv("noise_variance", format_real(packets.noise_variance));
  print_kv("prior_mean", format_real(r.prior.mean));
  print_kv("prior_variance", format_real(r.prior.variance));
  print_kv("posterior_variance", format_real(r.posterior.variance));
  print_kv("mmse_estimate", format_real(r.estimate));
  print_kv("bayesian_mse", format_real(r.bayesian_mse));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clock skew estimation from symbol timing recovery"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "Run one scenario file");
  std::string scenario_path, sim_out;
  std::optional<std::uint64_t> seed;
  sim->add_option("--scenario", scenario_path, "Scenario file")->required();
  sim->add_option("--seed", seed, "Override the scenario seed");
  sim->add_option("--out", sim_out, "Directory for the report and trace CSV");

  auto* tables = app.add_subcommand("tables", "Run the eight reference setups");
  std::string tables_out;
  tables->add_option("--out", tables_out, "Directory for reports and traces");

  auto* crlb = app.add_subcommand("crlb", "Cramer-Rao bound on skew");
  double xi = 1.0, rate = 1.0, esn0_db = 0.0;
  crlb->add_option("--xi", xi, "Loop parameter")->required();
  crlb->add_option("--rate", rate, "Symbol rate (symbols/s)")->required();
  crlb->add_option("--esn0-db", esn0_db, "Es/N0 in dB")->required();

  auto* energy = app.add_subcommand("energy", "Radio energy for a packet");
  double bits = 0.0, distance = 0.0, ec = kDefaultCircuitEnergyPerBit, eps = kDefaultAmpGain;
  energy->add_option("--bits", bits, "Bits sent")->required()->check(CLI::NonNegativeNumber);
  energy->add_option("--distance", distance, "Distance in metres")->required()->check(CLI::NonNegativeNumber);
  energy->add_option("--ec", ec, "Circuit energy per bit (J)");
  energy->add_option("--eps", eps, "Amplifier energy (J/bit/m^2)");

  auto* fuse = app.add_subcommand("fuse", "Combine trace prior with packet observations");
  std::vector<std::string> trace_paths;
  std::string obs_path;
  fuse->add_option("--traces", trace_paths, "Trace CSV files")->required()->expected(1, -1);
  fuse->add_option("--obs", obs_path, "Observation file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return cmd_simulate(scenario_path, seed, sim_out);
    if (*tables) return cmd_tables(tables_out);
    if (*crlb) return cmd_crlb(xi, rate, esn0_db);
    if (*energy) return cmd_energy(bits, distance, ec, eps);
    if (*fuse) return cmd_fuse(trace_paths, obs_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
