#include "damp/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "damp/problem.hpp"
#include "damp/rng.hpp"

namespace damp {

void SweepConfig::validate() const {
  if (N < 1) throw std::invalid_argument("sweep config: N must be at least 1");
  if (kappas.empty()) throw std::invalid_argument("sweep config: kappa grid is empty");
  if (rhos.empty()) throw std::invalid_argument("sweep config: rho grid is empty");
  if (noise_sigmas.empty()) {
    throw std::invalid_argument("sweep config: noise_sigma grid is empty");
  }
  if (sensor_counts.empty()) throw std::invalid_argument("sweep config: p grid is empty");
  if (protocols.empty()) throw std::invalid_argument("sweep config: protocol list is empty");
  if (runs < 1) throw std::invalid_argument("sweep config: runs must be at least 1");
  if (!(theta > 0.0 && theta < 1.0)) {
    throw std::invalid_argument("sweep config: theta must be in (0, 1)");
  }
  if (threads < 0) throw std::invalid_argument("sweep config: threads must be nonnegative");
  for (double k : kappas) {
    if (!(k > 0.0 && k <= 1.0)) throw std::invalid_argument("sweep config: kappa must be in (0, 1]");
  }
  for (double r : rhos) {
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("sweep config: rho must be in (0, 1]");
  }
  for (double s : noise_sigmas) {
    if (!(s >= 0.0)) throw std::invalid_argument("sweep config: noise_sigma must be nonnegative");
  }
  for (int p : sensor_counts) {
    if (p < 1) throw std::invalid_argument("sweep config: p must be at least 1");
  }
  schedule.validate();
}

std::uint64_t cell_run_seed(std::uint64_t base_seed, double kappa, double rho,
                            double noise_sigma, int P, int run) {
  std::uint64_t s = base_seed;
  s = seed_combine(s, std::bit_cast<std::uint64_t>(kappa));
  s = seed_combine(s, std::bit_cast<std::uint64_t>(rho));
  s = seed_combine(s, std::bit_cast<std::uint64_t>(noise_sigma));
  s = seed_combine(s, static_cast<std::uint64_t>(P));
  s = seed_combine(s, static_cast<std::uint64_t>(run));
  return s;
}

namespace {

struct Cell {
  double kappa;
  double rho;
  double noise_sigma;
  int P;
};

std::vector<Cell> grid_cells(const SweepConfig& config) {
  std::vector<Cell> cells;
  for (double kappa : config.kappas) {
    for (double rho : config.rhos) {
      for (double sigma : config.noise_sigmas) {
        for (int P : config.sensor_counts) {
          cells.push_back(Cell{kappa, rho, sigma, P});
        }
      }
    }
  }
  return cells;
}

std::vector<SampleRow> run_one(const SweepConfig& config, const Cell& cell, int run) {
  const std::uint64_t seed =
      cell_run_seed(config.base_seed, cell.kappa, cell.rho, cell.noise_sigma, cell.P, run);
  const ProblemInstance instance =
      generate_instance(config.N, cell.kappa, cell.rho, cell.noise_sigma, seed);
  const Partition partition = partition_rows(instance, cell.P);
  DampOptions options;
  options.theta = config.theta;
  const DampRunReport report =
      run_damp(instance, partition, config.schedule, config.protocols, options);

  std::vector<SampleRow> rows;
  rows.reserve(report.samples.size() * config.protocols.size());
  for (const IterationSample& sample : report.samples) {
    for (std::size_t j = 0; j < config.protocols.size(); ++j) {
      SampleRow row;
      row.kappa = cell.kappa;
      row.rho = cell.rho;
      row.noise_sigma = cell.noise_sigma;
      row.P = cell.P;
      row.protocol = config.protocols[j];
      row.run = run;
      row.seed = seed;
      row.candidate = sample.candidate;
      row.tau = sample.tau;
      row.t = sample.t;
      row.mu_m = sample.per_protocol[j].mu_m;
      row.sigma = sample.sigma;
      row.l0 = sample.l0;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace

std::vector<SampleRow> collect_sweep_samples(const SweepConfig& config) {
  config.validate();
  const std::vector<Cell> cells = grid_cells(config);
  const std::size_t task_count = cells.size() * static_cast<std::size_t>(config.runs);
  std::vector<std::vector<SampleRow>> task_rows(task_count);

  unsigned worker_count = config.threads > 0
                              ? static_cast<unsigned>(config.threads)
                              : std::max(1u, std::thread::hardware_concurrency());
  worker_count = std::min<unsigned>(worker_count, static_cast<unsigned>(task_count));

  std::atomic<std::size_t> next_task{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (true) {
      const std::size_t task = next_task.fetch_add(1);
      if (task >= task_count) break;
      try {
        const Cell& cell = cells[task / config.runs];
        const int run = static_cast<int>(task % config.runs);
        task_rows[task] = run_one(config, cell, run);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  if (worker_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < worker_count; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<SampleRow> rows;
  for (const auto& part : task_rows) {
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

std::vector<CellMean> summarize_mean_nmn(const SweepConfig& config,
                                         const std::vector<SampleRow>& rows) {
  std::vector<CellMean> cells;
  for (const Cell& cell : grid_cells(config)) {
    for (ProtocolKind protocol : config.protocols) {
      CellMean mean;
      mean.kappa = cell.kappa;
      mean.rho = cell.rho;
      mean.noise_sigma = cell.noise_sigma;
      mean.P = cell.P;
      mean.protocol = protocol;
      mean.runs = config.runs;
      double total = 0.0;
      std::uint64_t count = 0;
      for (const SampleRow& row : rows) {
        if (row.kappa == cell.kappa && row.rho == cell.rho &&
            row.noise_sigma == cell.noise_sigma && row.P == cell.P &&
            row.protocol == protocol && !std::isnan(row.mu_m)) {
          total += row.mu_m;
          ++count;
        }
      }
      mean.samples = count;
      mean.mean_mu_m = count > 0 ? total / static_cast<double>(count) : 0.0;
      cells.push_back(mean);
    }
  }
  return cells;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) return "nan";
  return std::string(buffer, ptr);
}

void write_samples_csv(std::ostream& out, const std::vector<SampleRow>& rows) {
  out << "kappa,rho,noise_sigma,P,protocol,run,seed,candidate,tau,t,mu_m,sigma,l0\n";
  for (const SampleRow& r : rows) {
    out << format_double(r.kappa) << ',' << format_double(r.rho) << ','
        << format_double(r.noise_sigma) << ',' << r.P << ',' << to_string(r.protocol)
        << ',' << r.run << ',' << r.seed << ',' << r.candidate << ','
        << format_double(r.tau) << ',' << r.t << ',' << format_double(r.mu_m) << ','
        << format_double(r.sigma) << ',' << r.l0 << '\n';
  }
}

void write_means_csv(std::ostream& out, const std::vector<CellMean>& cells) {
  out << "kappa,rho,noise_sigma,P,protocol,runs,samples,mean_mu_m\n";
  for (const CellMean& c : cells) {
    out << format_double(c.kappa) << ',' << format_double(c.rho) << ','
        << format_double(c.noise_sigma) << ',' << c.P << ',' << to_string(c.protocol)
        << ',' << c.runs << ',' << c.samples << ',' << format_double(c.mean_mu_m)
        << '\n';
  }
}

void write_run_report_csv(std::ostream& out, const DampRunReport& report,
                          std::uint64_t seed) {
  out << "protocol,seed,candidate,tau,t,mu_m,sigma,l0,"
         "msgs_compute_x,msgs_total,sum_R,F_size,V_size,global_summations\n";
  for (const IterationSample& sample : report.samples) {
    for (std::size_t j = 0; j < report.protocols.size(); ++j) {
      const ProtocolIterationStats& stats = sample.per_protocol[j];
      out << to_string(report.protocols[j]) << ',' << seed << ',' << sample.candidate
          << ',' << format_double(sample.tau) << ',' << sample.t << ','
          << format_double(stats.mu_m) << ',' << format_double(sample.sigma) << ','
          << sample.l0 << ',' << stats.ledger.compute_x_total() << ','
          << stats.ledger.total() << ',' << stats.summary.sum_R << ','
          << stats.summary.F_size << ',' << stats.summary.V_size << ','
          << stats.summary.global_summations << '\n';
    }
  }
}

}  // namespace damp
