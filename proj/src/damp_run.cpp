#include "damp/damp_run.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace damp {

namespace {

struct Snapshot {
  double tau = 0.0;
  int candidate = 0;
  Vector x;
  double sigma = 0.0;
};

void drain_all(Network& net) {
  Message msg;
  for (int node = 1; node <= net.node_count(); ++node) {
    while (net.try_receive(node, msg)) {
    }
  }
}

}  // namespace

double SensorState::sigma_p() const { return std::sqrt(z_sum_squares); }

std::vector<SensorState> make_sensors(const ProblemInstance& instance,
                                      const Partition& partition) {
  const int M = instance.M();
  if (partition.row_ranges.empty() || partition.row_ranges.back().end != M ||
      partition.row_ranges.front().begin != 0) {
    throw std::invalid_argument("make_sensors: partition does not cover the rows");
  }
  std::vector<SensorState> sensors;
  sensors.reserve(partition.P);
  for (int p = 0; p < partition.P; ++p) {
    const RowRange rows = partition.row_ranges[p];
    SensorState s;
    s.node_id = p + 1;
    s.rows = rows;
    s.A_local = instance.A.middleRows(rows.begin, rows.size());
    s.y_local = instance.y.segment(rows.begin, rows.size());
    s.z_local = s.y_local;
    s.z_sum_squares = sum_squares(s.z_local);
    sensors.push_back(std::move(s));
  }
  return sensors;
}

Vector local_compute_w(const SensorState& sensor, const Vector& x_t) {
  if (x_t.size() != sensor.A_local.cols()) {
    throw std::invalid_argument("local_compute_w: estimate length mismatch");
  }
  Vector w = block_transpose_product(sensor.A_local,
                                     RowRange{0, sensor.rows.size()}, sensor.z_local);
  if (sensor.node_id == 1) {
    w = x_t + w;
  }
  return w;
}

void local_update_z(SensorState& sensor, const Vector& x_next, int x_next_l0,
                    int M) {
  if (x_next.size() != sensor.A_local.cols()) {
    throw std::invalid_argument("local_update_z: estimate length mismatch");
  }
  const double onsager = static_cast<double>(x_next_l0) / static_cast<double>(M);
  const RowRange local{0, sensor.rows.size()};
  const Vector ax = block_product(sensor.A_local, local, x_next);
  for (int i = 0; i < local.end; ++i) {
    sensor.z_local(i) = residual_update(sensor.y_local(i), ax(i), onsager,
                                        sensor.z_local(i));
  }
  sensor.z_sum_squares = sum_squares(sensor.z_local);
}

double aggregate_sigma(const std::vector<SensorState>& sensors, int M,
                       Network& net, double tau_for_threshold, double theta) {
  const int P = static_cast<int>(sensors.size());
  if (P < 1) throw std::invalid_argument("aggregate_sigma: no sensors");
  net.set_phase(Phase::SigmaAggregate);
  std::vector<double> ssq;
  ssq.reserve(P);
  ssq.push_back(sensors[0].z_sum_squares);
  for (int p = 2; p <= P; ++p) {
    net.send_scalar(p, 1, sensors[p - 1].z_sum_squares);
  }
  Message msg;
  while (net.try_receive(1, msg)) {
    ssq.push_back(msg.value);
  }
  const double sigma = combine_sigma(ssq, M);
  if (P >= 2) {
    net.set_phase(Phase::ThresholdUpdate);
    const double T = tau_for_threshold * sigma * theta / static_cast<double>(P - 1);
    net.broadcast_scalar(1, T);
    for (int p = 2; p <= P; ++p) {
      Message scalar;
      net.try_receive(p, scalar);
    }
  }
  return sigma;
}

namespace {

DampRunReport run_damp_impl(const ProblemInstance& instance,
                            const Partition& partition,
                            const TuningSchedule& schedule,
                            std::span<const ProtocolKind> protocols,
                            std::span<Network* const> nets,
                            const DampOptions& options) {
  schedule.validate();
  if (protocols.empty()) {
    throw std::invalid_argument("run_damp: at least one protocol required");
  }
  const int N = instance.N();
  const int M = instance.M();
  const int P = partition.P;
  if (P == 1) {
    for (ProtocolKind kind : protocols) {
      if (kind != ProtocolKind::Naive) {
        throw std::invalid_argument("run_damp: P = 1 supports only the naive protocol");
      }
    }
  }
  for (Network* net : nets) {
    if (net->node_count() != P) {
      throw std::invalid_argument("run_damp: network size does not match partition");
    }
  }

  DampRunReport report;
  report.protocols.assign(protocols.begin(), protocols.end());
  report.audited = options.audit_equivalence;

  std::vector<SensorState> sensors = make_sensors(instance, partition);

  // Iteration state shared by all protocols (their estimates coincide).
  Vector x_prev = Vector::Zero(N);
  std::vector<double> init_ssq;
  for (const SensorState& s : sensors) init_ssq.push_back(s.z_sum_squares);
  double sigma_prev = combine_sigma(init_ssq, M);

  // Centralized twin for the lockstep audit.
  std::optional<AmpState> oracle;
  if (options.audit_equivalence) {
    oracle = make_initial_state(instance.A, instance.y, partition.blocks());
    if (!bits_equal(oracle->sigma, sigma_prev)) report.equivalence_ok = false;
  }

  Snapshot accepted;  // solution of the last candidate whose sigma did not increase
  bool have_accepted = false;
  double sigma_previous_candidate = std::numeric_limits<double>::infinity();
  int global_iter = 0;

  for (int i = 1; i <= schedule.length; ++i) {
    const double tau = schedule.candidate(i);
    bool candidate_converged = false;
    int candidate_iters = 0;

    for (int t = 1; t <= schedule.max_inner_iters; ++t) {
      std::vector<Vector> w;
      w.reserve(P);
      for (const SensorState& s : sensors) {
        w.push_back(local_compute_w(s, x_prev));
      }
      const double beta = tau * sigma_prev;

      IterationSample sample;
      sample.candidate = i;
      sample.tau = tau;
      sample.t = t;
      sample.per_protocol.resize(protocols.size());

      Vector x_t;
      std::vector<MessageLedger> before;
      before.reserve(nets.size());
      for (Network* net : nets) before.push_back(net->ledger());

      for (std::size_t j = 0; j < protocols.size(); ++j) {
        ProtocolOutput out = run_protocol(protocols[j], w, beta, options.theta, *nets[j]);
        sample.per_protocol[j].summary = out.summary;
        if (j == 0) {
          x_t = std::move(out.x_next);
        } else if (!bits_equal(out.x_next, x_t)) {
          report.equivalence_ok = false;
        }
      }

      const int l0 = count_nonzero(x_t);
      if (P >= 2) {
        std::vector<std::pair<int, double>> nonzeros;
        nonzeros.reserve(l0);
        for (int n = 0; n < N; ++n) {
          if (x_t(n) != 0.0) nonzeros.emplace_back(n, x_t(n));
        }
        for (Network* net : nets) {
          net->set_phase(Phase::XBroadcast);
          net->broadcast_nonzeros(1, nonzeros);
          drain_all(*net);
        }
      }

      for (SensorState& s : sensors) {
        local_update_z(s, x_t, l0, M);
      }

      double sigma_t = 0.0;
      for (std::size_t j = 0; j < nets.size(); ++j) {
        const double s = aggregate_sigma(sensors, M, *nets[j], tau, options.theta);
        if (j == 0) sigma_t = s;
      }

      for (std::size_t j = 0; j < nets.size(); ++j) {
        ProtocolIterationStats& stats = sample.per_protocol[j];
        stats.ledger = nets[j]->ledger() - before[j];
        stats.mu_m = (P >= 2) ? nmn(stats.ledger, N, P)
                              : std::numeric_limits<double>::quiet_NaN();
      }

      if (options.audit_equivalence) {
        oracle = amp_step(*oracle, instance.A, instance.y, tau, partition.blocks());
        bool ok = bits_equal(oracle->x, x_t) && bits_equal(oracle->sigma, sigma_t);
        if (ok) {
          int offset = 0;
          for (const SensorState& s : sensors) {
            for (int r = 0; r < s.rows.size(); ++r) {
              if (!bits_equal(oracle->z(offset + r), s.z_local(r))) {
                ok = false;
                break;
              }
            }
            offset += s.rows.size();
            if (!ok) break;
          }
        }
        if (!ok) report.equivalence_ok = false;
      }

      sample.sigma = sigma_t;
      sample.l0 = l0;
      report.samples.push_back(std::move(sample));
      ++global_iter;
      ++candidate_iters;

      const bool converged = sigma_converged(sigma_t, sigma_prev, schedule.rel_tol);
      x_prev = std::move(x_t);
      sigma_prev = sigma_t;
      if (converged) {
        candidate_converged = true;
        break;
      }
    }

    report.candidates.push_back(
        CandidateSummary{tau, candidate_iters, candidate_converged, sigma_prev});
    if (!candidate_converged) report.all_candidates_converged = false;

    if (tuning_should_stop(sigma_prev, sigma_previous_candidate)) {
      report.stopped_on_increase = true;
      break;
    }
    accepted = Snapshot{tau, i, x_prev, sigma_prev};
    have_accepted = true;
    sigma_previous_candidate = sigma_prev;
  }

  if (!have_accepted) {
    throw std::logic_error("run_damp: no candidate was accepted");
  }
  report.tuned = TunedSolution{accepted.tau, accepted.sigma, accepted.x};
  report.selected_candidate = accepted.candidate;
  report.total_inner_iterations = global_iter;
  return report;
}

}  // namespace

DampRunReport run_damp(const ProblemInstance& instance, const Partition& partition,
                       const TuningSchedule& schedule,
                       std::span<const ProtocolKind> protocols,
                       const DampOptions& options) {
  std::vector<Network> nets;
  nets.reserve(protocols.size());
  for (std::size_t i = 0; i < protocols.size(); ++i) {
    nets.emplace_back(partition.P);
  }
  std::vector<Network*> net_ptrs;
  for (Network& n : nets) net_ptrs.push_back(&n);
  return run_damp_impl(instance, partition, schedule, protocols, net_ptrs, options);
}

DampRunReport run_damp(const ProblemInstance& instance, const Partition& partition,
                       const TuningSchedule& schedule, ProtocolKind protocol,
                       Network& net, const DampOptions& options) {
  const ProtocolKind kinds[] = {protocol};
  Network* nets[] = {&net};
  return run_damp_impl(instance, partition, schedule, kinds, nets, options);
}

}  // namespace damp
