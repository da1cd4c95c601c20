#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "damp/linalg.hpp"
#include "damp/simnet.hpp"

namespace damp {

enum class ProtocolKind { Gcamp, ModifiedTa, Naive };

std::string to_string(ProtocolKind kind);
ProtocolKind parse_protocol(std::string_view name);  // throws on unknown name

/// Threshold inputs for one GCAMP round: beta is the effective soft threshold
/// tau * sigma, theta in (0, 1) tunes the per-sensor report threshold
/// T = beta * theta / (P - 1).
struct GcampParams {
  double theta = 0.8;
  double beta = 0.0;

  double threshold_T(int P) const;
  void validate() const;
};

/// Internal sets of one GCAMP round, kept so tests can audit the message
/// accounting without re-running the protocol. Sensor ids are 1-based,
/// component indices 0-based.
struct GcampTrace {
  double threshold_T = 0.0;
  std::vector<std::vector<int>> R_sets;  // R_sets[p] for p = 2..P; slots 0,1 empty
  Vector upper_bounds;                   // U(n)
  std::vector<int> m;                    // m_n = |S_n|
  std::vector<std::vector<int>> S;       // reporting sensors per index, ascending
  std::vector<int> F;                    // indices broadcast for completion
  std::vector<int> V;                    // indices with U(n) > beta

  std::uint64_t sum_R() const;
  std::uint64_t sum_F_minus_R() const;
};

struct GcampResult {
  Vector x_next;
  MessageLedger ledger;  // messages of this call only
  GcampTrace trace;
};

/// Four-step thresholded gather: sensors report entries above T, the
/// aggregator bounds every column sum from the reports, requests only the
/// indices whose bound clears beta, and soft-thresholds the completed sums.
/// The output equals the soft threshold of the full column sums bit for bit.
GcampResult gcamp(const std::vector<Vector>& w, const GcampParams& params,
                  Network& net);

/// U(n) recomputed from a round's trace; always >= |sum_p w_p(n)|.
double gcamp_upper_bound(int n, const std::vector<Vector>& w,
                         const GcampTrace& trace);

struct TaSummationRecord {
  int owner = 0;  // sensor whose frontier was broadcast
  int index = -1;
  double u_value = 0.0;
};

struct TaTrace {
  std::vector<std::vector<int>> sorted_order;  // per sensor, descending |w|; slot 0 empty
  std::vector<double> frontier_u;              // last broadcast value per sensor; slot 0 unused
  std::int64_t global_summations = 0;          // N_s
  std::vector<char> sent;                      // per-index consumed flag
  std::vector<TaSummationRecord> history;
};

struct TaResult {
  Vector x_next;
  MessageLedger ledger;
  TaTrace trace;
};

/// Round-robin top-magnitude queries: each turn one sensor broadcasts its
/// largest unsent (index, value), everyone else replies with theirs at that
/// index, and the completed sum is thresholded. Stops once every sensor's
/// frontier is low enough that no unsent sum can clear beta. Also exactly
/// reproduces the centralized soft-thresholded sums.
TaResult modified_ta(const std::vector<Vector>& w, double beta, Network& net);

struct NaiveResult {
  Vector x_next;
  MessageLedger ledger;
};

/// Baseline: sensors 2..P forward every entry to sensor 1. N*(P-1) messages.
NaiveResult naive_gather(const std::vector<Vector>& w, double beta, Network& net);

/// Normalized message number: messages spent computing the new estimate
/// divided by the naive cost N * (P - 1). Requires P >= 2.
double nmn(const MessageLedger& ledger, int N, int P);

/// Small cross-protocol summary used in per-iteration reports.
struct TraceSummary {
  std::uint64_t sum_R = 0;
  int F_size = 0;
  int V_size = 0;
  std::int64_t global_summations = 0;
};

struct ProtocolOutput {
  Vector x_next;
  MessageLedger ledger;
  TraceSummary summary;
};

ProtocolOutput run_protocol(ProtocolKind kind, const std::vector<Vector>& w,
                            double beta, double theta, Network& net);

}  // namespace damp
