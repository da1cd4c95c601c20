// Command-line front end: instance generation, single recovery runs, and the
// Monte-Carlo sweeps behind the NMN tables and CDF data. All outputs are CSV.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "damp/amp.hpp"
#include "damp/damp_run.hpp"
#include "damp/problem.hpp"
#include "damp/protocols.hpp"
#include "damp/sweep.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kExitNonConverged = 3;

fs::path resolve_out(const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return p;
  if (const char* dir = std::getenv("DAMP_OUT_DIR"); dir != nullptr && *dir != '\0') {
    return fs::path(dir) / p;
  }
  return p;
}

std::ofstream open_out(const std::string& path) {
  const fs::path resolved = resolve_out(path);
  if (resolved.has_parent_path()) {
    fs::create_directories(resolved.parent_path());
  }
  std::ofstream out(resolved, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(resolved.string() + ": cannot open for writing");
  return out;
}

std::vector<damp::ProtocolKind> parse_protocols(const std::vector<std::string>& names) {
  std::vector<damp::ProtocolKind> kinds;
  kinds.reserve(names.size());
  for (const std::string& name : names) {
    kinds.push_back(damp::parse_protocol(name));
  }
  return kinds;
}

struct ScheduleFlags {
  double tau_max = 3.0;
  double tau_step = 0.2;
  int tau_count = 11;
  double eps = 0.01;
  int maxiter = 30;

  damp::TuningSchedule schedule() const {
    damp::TuningSchedule s;
    s.tau_max = tau_max;
    s.delta_tau = tau_step;
    s.length = tau_count;
    s.rel_tol = eps;
    s.max_inner_iters = maxiter;
    return s;
  }
};

void add_schedule_flags(CLI::App* cmd, ScheduleFlags& flags) {
  cmd->add_option("--tau-max", flags.tau_max, "Largest threshold-multiplier candidate");
  cmd->add_option("--tau-step", flags.tau_step, "Step between candidates");
  cmd->add_option("--tau-count", flags.tau_count, "Number of candidates");
  cmd->add_option("--eps", flags.eps, "Relative sigma convergence tolerance");
  cmd->add_option("--maxiter", flags.maxiter, "Max inner iterations per candidate");
}

int cmd_generate(int n, double kappa, double rho, double noise_sigma, int p,
                 std::uint64_t seed, const std::string& out) {
  const damp::ProblemInstance instance =
      damp::generate_instance(n, kappa, rho, noise_sigma, seed);
  damp::partition_rows(instance, p);  // validates p against M before writing
  const fs::path path = resolve_out(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  damp::save_instance(instance, p, path);
  std::cout << "wrote " << path.string() << " (N=" << instance.N()
            << ", M=" << instance.M() << ", P=" << p << ")\n";
  return 0;
}

int cmd_solve(const std::string& instance_path, int n, double kappa, double rho,
              double noise_sigma, int p, std::uint64_t seed,
              const std::string& protocol_name, double theta,
              const ScheduleFlags& flags, bool audit, const std::string& out,
              const std::string& x_out, const std::string& ledger_out) {
  damp::ProblemInstance instance;
  int P = p;
  if (!instance_path.empty()) {
    damp::LoadedInstance loaded = damp::load_instance(resolve_out(instance_path));
    instance = std::move(loaded.instance);
    if (P <= 0) P = loaded.P;
  } else {
    instance = damp::generate_instance(n, kappa, rho, noise_sigma, seed);
    if (P <= 0) P = 1;
  }
  const damp::Partition partition = damp::partition_rows(instance, P);
  const damp::ProtocolKind protocol = damp::parse_protocol(protocol_name);

  damp::DampOptions options;
  options.theta = theta;
  options.audit_equivalence = audit;
  damp::Network net(P);
  const damp::DampRunReport report = damp::run_damp(
      instance, partition, flags.schedule(), protocol, net, options);

  if (!out.empty()) {
    std::ofstream os = open_out(out);
    damp::write_run_report_csv(os, report, instance.seed);
  }
  if (!x_out.empty()) {
    std::ofstream os = open_out(x_out);
    os << "n,value\n";
    for (int i = 0; i < report.tuned.x_star.size(); ++i) {
      os << i << ',' << damp::format_double(report.tuned.x_star(i)) << '\n';
    }
  }
  if (!ledger_out.empty()) {
    std::ofstream os = open_out(ledger_out);
    net.ledger().write_csv(os);
  }

  std::cout << "tau_star=" << damp::format_double(report.tuned.tau_star)
            << " sigma_star=" << damp::format_double(report.tuned.sigma_star)
            << " nonzeros=" << damp::count_nonzero(report.tuned.x_star)
            << " iterations=" << report.total_inner_iterations
            << " candidates=" << report.candidates.size()
            << " messages=" << net.ledger().total() << '\n';
  if (audit) {
    std::cout << "equivalence=" << (report.equivalence_ok ? "ok" : "VIOLATED") << '\n';
  }
  if (!report.all_candidates_converged) {
    std::cout << "warning: at least one candidate hit the iteration cap\n";
    return kExitNonConverged;
  }
  return 0;
}

int cmd_sweep(const damp::SweepConfig& config, const std::string& out,
              const std::string& samples_out) {
  const std::vector<damp::SampleRow> rows = damp::collect_sweep_samples(config);
  const std::vector<damp::CellMean> means = damp::summarize_mean_nmn(config, rows);
  {
    std::ofstream os = open_out(out);
    damp::write_means_csv(os, means);
  }
  if (!samples_out.empty()) {
    std::ofstream os = open_out(samples_out);
    damp::write_samples_csv(os, rows);
  }
  for (const damp::CellMean& cell : means) {
    std::cout << "kappa=" << damp::format_double(cell.kappa)
              << " rho=" << damp::format_double(cell.rho)
              << " sigma=" << damp::format_double(cell.noise_sigma) << " P=" << cell.P
              << ' ' << damp::to_string(cell.protocol)
              << " mean_mu_m=" << damp::format_double(cell.mean_mu_m) << '\n';
  }
  return 0;
}

struct Scenario {
  double kappa;
  double rho;
  double noise_sigma;
  int P;
};

int cmd_cdf(const damp::SweepConfig& base, const std::vector<Scenario>& scenarios,
            const std::string& out) {
  std::ofstream os = open_out(out);
  os << "scenario,kappa,rho,noise_sigma,P,protocol,run,seed,candidate,tau,t,mu_m,sigma,l0\n";
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    damp::SweepConfig config = base;
    config.kappas = {scenarios[s].kappa};
    config.rhos = {scenarios[s].rho};
    config.noise_sigmas = {scenarios[s].noise_sigma};
    config.sensor_counts = {scenarios[s].P};
    const std::vector<damp::SampleRow> rows = damp::collect_sweep_samples(config);
    for (const damp::SampleRow& r : rows) {
      os << (s + 1) << ',' << damp::format_double(r.kappa) << ','
         << damp::format_double(r.rho) << ',' << damp::format_double(r.noise_sigma)
         << ',' << r.P << ',' << damp::to_string(r.protocol) << ',' << r.run << ','
         << r.seed << ',' << r.candidate << ',' << damp::format_double(r.tau) << ','
         << r.t << ',' << damp::format_double(r.mu_m) << ','
         << damp::format_double(r.sigma) << ',' << r.l0 << '\n';
    }
    std::cout << "scenario " << (s + 1) << " done\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed AMP recovery and communication-cost experiments"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "Key=value defaults, one [subcommand] section per command");

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic instance file");
  int gen_n = 5000;
  double gen_kappa = 0.2, gen_rho = 0.1, gen_sigma = 0.02;
  int gen_p = 10;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "instance.damp";
  gen->add_option("--n", gen_n, "Signal length");
  gen->add_option("--kappa", gen_kappa, "Undersampling ratio M/N");
  gen->add_option("--rho", gen_rho, "Sparsity ratio K/M");
  gen->add_option("--noise-sigma", gen_sigma, "Measurement noise std deviation");
  gen->add_option("--p", gen_p, "Sensor count stored in the header");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--out", gen_out, "Output file");

  // solve
  auto* solve = app.add_subcommand("solve", "Run one distributed recovery");
  std::string solve_instance;
  int solve_n = 5000;
  double solve_kappa = 0.2, solve_rho = 0.1, solve_sigma = 0.02;
  int solve_p = 0;
  std::uint64_t solve_seed = 1;
  std::string solve_protocol = "gcamp";
  double solve_theta = 0.8;
  ScheduleFlags solve_schedule;
  bool solve_audit = false;
  std::string solve_out = "solve_report.csv";
  std::string solve_x_out;
  std::string solve_ledger_out;
  solve->add_option("--instance", solve_instance, "Instance file (else generated from flags)");
  solve->add_option("--n", solve_n, "Signal length");
  solve->add_option("--kappa", solve_kappa, "Undersampling ratio M/N");
  solve->add_option("--rho", solve_rho, "Sparsity ratio K/M");
  solve->add_option("--noise-sigma", solve_sigma, "Measurement noise std deviation");
  solve->add_option("--p", solve_p, "Sensor count (0 = file header or 1)");
  solve->add_option("--seed", solve_seed, "Generator seed");
  solve->add_option("--protocol", solve_protocol, "gcamp, ta or naive");
  solve->add_option("--theta", solve_theta, "Report-threshold factor in (0, 1)");
  add_schedule_flags(solve, solve_schedule);
  solve->add_flag("--audit", solve_audit, "Run the centralized twin and compare bits");
  solve->add_option("--out", solve_out, "Per-iteration report CSV");
  solve->add_option("--x-out", solve_x_out, "Recovered signal CSV");
  solve->add_option("--ledger-out", solve_ledger_out, "Whole-run message ledger CSV");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Mean NMN over a parameter grid");
  damp::SweepConfig sweep_config;
  std::vector<std::string> sweep_protocols{"gcamp", "ta"};
  ScheduleFlags sweep_schedule;
  std::string sweep_out = "sweep_means.csv";
  std::string sweep_samples_out;
  sweep->add_option("--n", sweep_config.N, "Signal length");
  sweep->add_option("--kappa", sweep_config.kappas, "Undersampling ratios")->expected(-1);
  sweep->add_option("--rho", sweep_config.rhos, "Sparsity ratios")->expected(-1);
  sweep->add_option("--noise-sigma", sweep_config.noise_sigmas, "Noise levels")->expected(-1);
  sweep->add_option("--p", sweep_config.sensor_counts, "Sensor counts")->expected(-1);
  sweep->add_option("--protocol", sweep_protocols, "Protocols to measure")->expected(-1);
  sweep->add_option("--runs", sweep_config.runs, "Monte-Carlo runs per cell");
  sweep->add_option("--seed", sweep_config.base_seed, "Base seed");
  sweep->add_option("--theta", sweep_config.theta, "Report-threshold factor");
  sweep->add_option("--threads", sweep_config.threads, "Worker threads (0 = auto)");
  add_schedule_flags(sweep, sweep_schedule);
  sweep->add_option("--out", sweep_out, "Mean NMN CSV");
  sweep->add_option("--samples-out", sweep_samples_out, "Optional per-iteration samples CSV");

  // cdf
  auto* cdf = app.add_subcommand("cdf", "Per-iteration NMN samples for CDF plots");
  damp::SweepConfig cdf_config;
  cdf_config.runs = 100;
  std::vector<std::string> cdf_protocols{"gcamp", "ta"};
  ScheduleFlags cdf_schedule;
  std::vector<double> cdf_kappas, cdf_rhos, cdf_sigmas;
  std::vector<int> cdf_ps;
  std::string cdf_out = "cdf_samples.csv";
  cdf->add_option("--n", cdf_config.N, "Signal length");
  cdf->add_option("--kappa", cdf_kappas, "Scenario undersampling ratios")->expected(-1);
  cdf->add_option("--rho", cdf_rhos, "Scenario sparsity ratios")->expected(-1);
  cdf->add_option("--noise-sigma", cdf_sigmas, "Scenario noise levels")->expected(-1);
  cdf->add_option("--p", cdf_ps, "Scenario sensor counts")->expected(-1);
  cdf->add_option("--protocol", cdf_protocols, "Protocols to measure")->expected(-1);
  cdf->add_option("--runs", cdf_config.runs, "Monte-Carlo runs per scenario");
  cdf->add_option("--seed", cdf_config.base_seed, "Base seed");
  cdf->add_option("--theta", cdf_config.theta, "Report-threshold factor");
  cdf->add_option("--threads", cdf_config.threads, "Worker threads (0 = auto)");
  add_schedule_flags(cdf, cdf_schedule);
  cdf->add_option("--out", cdf_out, "Samples CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      return cmd_generate(gen_n, gen_kappa, gen_rho, gen_sigma, gen_p, gen_seed, gen_out);
    }
    if (solve->parsed()) {
      return cmd_solve(solve_instance, solve_n, solve_kappa, solve_rho, solve_sigma,
                       solve_p, solve_seed, solve_protocol, solve_theta, solve_schedule,
                       solve_audit, solve_out, solve_x_out, solve_ledger_out);
    }
    if (sweep->parsed()) {
      sweep_config.protocols = parse_protocols(sweep_protocols);
      sweep_config.schedule = sweep_schedule.schedule();
      return cmd_sweep(sweep_config, sweep_out, sweep_samples_out);
    }
    if (cdf->parsed()) {
      cdf_config.protocols = parse_protocols(cdf_protocols);
      cdf_config.schedule = cdf_schedule.schedule();
      std::vector<Scenario> scenarios;
      if (cdf_kappas.empty() && cdf_rhos.empty() && cdf_sigmas.empty() && cdf_ps.empty()) {
        scenarios = {{0.2, 0.1, 0.02, 5},
                     {0.2, 0.1, 0.02, 10},
                     {0.2, 0.1, 0.01, 10},
                     {0.3, 0.1, 0.02, 10}};
      } else {
        if (cdf_kappas.empty()) cdf_kappas = {0.2};
        if (cdf_rhos.empty()) cdf_rhos = {0.1};
        if (cdf_sigmas.empty()) cdf_sigmas = {0.02};
        if (cdf_ps.empty()) cdf_ps = {10};
        for (double kappa : cdf_kappas) {
          for (double rho : cdf_rhos) {
            for (double sigma : cdf_sigmas) {
              for (int P : cdf_ps) {
                scenarios.push_back(Scenario{kappa, rho, sigma, P});
              }
            }
          }
        }
      }
      return cmd_cdf(cdf_config, scenarios, cdf_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
