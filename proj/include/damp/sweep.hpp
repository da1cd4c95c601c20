#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "damp/amp.hpp"
#include "damp/damp_run.hpp"
#include "damp/protocols.hpp"

namespace damp {

/// Monte-Carlo experiment grid. Every (kappa, rho, noise_sigma, P) cell is run
/// `runs` times; all protocols in the list share each run's instance and
/// iterate trajectory, so their message counts are directly comparable.
struct SweepConfig {
  int N = 5000;
  std::vector<double> kappas{0.2};
  std::vector<double> rhos{0.1};
  std::vector<double> noise_sigmas{0.02};
  std::vector<int> sensor_counts{10};
  std::vector<ProtocolKind> protocols{ProtocolKind::Gcamp, ProtocolKind::ModifiedTa};
  int runs = 100;
  std::uint64_t base_seed = 1;
  TuningSchedule schedule;
  double theta = 0.8;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;  // throws, naming the offending field
};

/// One inner iteration of one run for one protocol.
struct SampleRow {
  double kappa = 0.0;
  double rho = 0.0;
  double noise_sigma = 0.0;
  int P = 0;
  ProtocolKind protocol = ProtocolKind::Gcamp;
  int run = 0;
  std::uint64_t seed = 0;
  int candidate = 0;
  double tau = 0.0;
  int t = 0;
  double mu_m = 0.0;
  double sigma = 0.0;
  int l0 = 0;
};

struct CellMean {
  double kappa = 0.0;
  double rho = 0.0;
  double noise_sigma = 0.0;
  int P = 0;
  ProtocolKind protocol = ProtocolKind::Gcamp;
  int runs = 0;
  std::uint64_t samples = 0;
  double mean_mu_m = 0.0;
};

/// Seed of one (cell, run) task; independent of the protocol list, so adding a
/// protocol never changes the instances.
std::uint64_t cell_run_seed(std::uint64_t base_seed, double kappa, double rho,
                            double noise_sigma, int P, int run);

/// Executes the grid on a worker pool and returns every per-iteration sample,
/// ordered by (cell, run, iteration, protocol) regardless of scheduling.
std::vector<SampleRow> collect_sweep_samples(const SweepConfig& config);

/// Mean NMN per (cell, protocol), in grid-then-protocol order.
std::vector<CellMean> summarize_mean_nmn(const SweepConfig& config,
                                         const std::vector<SampleRow>& rows);

/// Shortest round-trip decimal rendering; NaN prints as "nan".
std::string format_double(double value);

void write_samples_csv(std::ostream& out, const std::vector<SampleRow>& rows);
void write_means_csv(std::ostream& out, const std::vector<CellMean>& cells);

/// Per-iteration report of a single run (solve subcommand and diagnostics).
void write_run_report_csv(std::ostream& out, const DampRunReport& report,
                          std::uint64_t seed);

}  // namespace damp
