#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "damp/amp.hpp"
#include "damp/problem.hpp"
#include "damp/protocols.hpp"
#include "damp/simnet.hpp"

namespace damp {

/// Everything one sensor owns: its row slice of the problem and its residual.
/// The squared residual norm is maintained alongside z because it is the
/// quantity that gets aggregated; re-deriving it from the norm would round
/// twice and break exact agreement with the centralized recursion.
struct SensorState {
  int node_id = 0;  // 1-based; node 1 is the aggregator
  RowRange rows;
  Matrix A_local;
  Vector y_local;
  Vector z_local;
  double z_sum_squares = 0.0;

  double sigma_p() const;  // ||z_local||_2
};

std::vector<SensorState> make_sensors(const ProblemInstance& instance,
                                      const Partition& partition);

/// w_p = A_p^T z_p, with the current estimate added on at sensor 1.
Vector local_compute_w(const SensorState& sensor, const Vector& x_t);

/// z_p = y_p - A_p x + (l0 / M) z_p, where l0 is the global nonzero count of
/// the new estimate (known locally after the nonzero broadcast).
void local_update_z(SensorState& sensor, const Vector& x_next, int x_next_l0,
                    int M);

/// Sensors 2..P send their squared residual norms to sensor 1 (one scalar
/// each); sensor 1 combines them into sigma = sqrt(sum_p ||z_p||^2 / M) and
/// shares the refreshed report threshold with its peers (one more scalar).
/// Both exchanges are logged outside the phases that count toward the NMN.
double aggregate_sigma(const std::vector<SensorState>& sensors, int M,
                       Network& net, double tau_for_threshold, double theta);

struct DampOptions {
  double theta = 0.8;
  bool audit_equivalence = false;  // advance a centralized twin and compare bits
};

/// Message statistics of one protocol for one inner iteration.
struct ProtocolIterationStats {
  double mu_m = 0.0;  // NaN when P == 1
  MessageLedger ledger;
  TraceSummary summary;
};

struct IterationSample {
  int candidate = 0;  // 1-based position in the tau list
  double tau = 0.0;
  int t = 0;  // 1-based within the candidate
  double sigma = 0.0;
  int l0 = 0;
  std::vector<ProtocolIterationStats> per_protocol;
};

struct CandidateSummary {
  double tau = 0.0;
  int iterations = 0;
  bool converged = false;
  double sigma = 0.0;
};

struct DampRunReport {
  std::vector<ProtocolKind> protocols;
  TunedSolution tuned;
  int selected_candidate = 0;
  bool stopped_on_increase = false;
  bool all_candidates_converged = true;
  std::vector<CandidateSummary> candidates;
  std::vector<IterationSample> samples;  // one per executed inner iteration
  int total_inner_iterations = 0;
  bool equivalence_ok = true;  // audit + cross-protocol agreement
  bool audited = false;
};

/// Full distributed run: per-sensor local updates, one global-computation
/// protocol call per inner iteration, nonzero broadcast, sigma aggregation,
/// and the descending-tau outer loop. With several protocols the first one
/// drives the iterates and the rest are executed on the same inputs against
/// their own networks (their estimates must agree bit for bit, and do).
DampRunReport run_damp(const ProblemInstance& instance, const Partition& partition,
                       const TuningSchedule& schedule,
                       std::span<const ProtocolKind> protocols,
                       const DampOptions& options = {});

/// Single-protocol entry point running over a caller-supplied network, whose
/// ledger accumulates the whole run.
DampRunReport run_damp(const ProblemInstance& instance, const Partition& partition,
                       const TuningSchedule& schedule, ProtocolKind protocol,
                       Network& net, const DampOptions& options = {});

}  // namespace damp
