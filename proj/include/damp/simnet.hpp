#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <utility>
#include <vector>

namespace damp {

/// Protocol phase a message belongs to. The first five build the new estimate
/// and count toward the normalized message number; the rest are coordination
/// traffic that is logged but excluded from it.
enum class Phase : int {
  GcampStep1,
  GcampStep2,
  GcampStep3,
  TaSummation,
  NaiveGather,
  SigmaAggregate,
  ThresholdUpdate,
  XBroadcast,
};
inline constexpr int kPhaseCount = 8;

enum class Kind : int {
  Pair,             // point-to-point (index, value)
  IndexBroadcast,   // one index announced to all peers
  Scalar,           // a single real number
  NonzeroBroadcast, // one (index, value) entry of the new estimate
};
inline constexpr int kKindCount = 4;

const char* to_string(Phase phase);
const char* to_string(Kind kind);

constexpr bool phase_counts_toward_x(Phase phase) {
  return phase == Phase::GcampStep1 || phase == Phase::GcampStep2 ||
         phase == Phase::GcampStep3 || phase == Phase::TaSummation ||
         phase == Phase::NaiveGather;
}

/// Typed tally of every simulated transmission.
class MessageLedger {
 public:
  void record(Phase phase, Kind kind, std::uint64_t count = 1);
  std::uint64_t count(Phase phase, Kind kind) const;
  std::uint64_t phase_total(Phase phase) const;
  std::uint64_t total() const;
  std::uint64_t compute_x_total() const;

  /// CSV rows "phase,kind,count"; zero counters are skipped unless asked for.
  void write_csv(std::ostream& out, bool include_zero_rows = false) const;

  bool operator==(const MessageLedger&) const = default;

  /// Per-counter difference; every counter of b must be <= the one in a.
  friend MessageLedger operator-(MessageLedger a, const MessageLedger& b);

 private:
  std::array<std::uint64_t, static_cast<std::size_t>(kPhaseCount* kKindCount)> counts_{};
};

struct Message {
  int from = 0;
  int index = -1;
  double value = 0.0;
  Kind kind = Kind::Pair;
};

/// In-process sensor network: P nodes with 1-based ids, synchronous loss-free
/// delivery, node 1 acting as the aggregator. A broadcast is one message no
/// matter how many nodes hear it; a nonzero broadcast costs one message per
/// entry. Every transmission bumps exactly one ledger counter.
class Network {
 public:
  explicit Network(int node_count);

  int node_count() const { return node_count_; }
  void set_phase(Phase phase) { phase_ = phase; }
  Phase phase() const { return phase_; }

  void send_pair(int from, int to, int index, double value);
  void send_scalar(int from, int to, double value);
  void broadcast_index(int from, int index);
  void broadcast_pair(int from, int index, double value);
  void broadcast_scalar(int from, double value);
  void broadcast_nonzeros(int from, const std::vector<std::pair<int, double>>& entries);

  /// Pops the oldest undelivered message for a node; false when none left.
  bool try_receive(int node, Message& out);
  std::size_t pending(int node) const;

  const MessageLedger& ledger() const { return ledger_; }

 private:
  void check_node(int node) const;
  void deliver_to_all_except(int from, const Message& message);

  int node_count_;
  Phase phase_ = Phase::NaiveGather;
  MessageLedger ledger_;
  std::vector<std::deque<Message>> inboxes_;  // slot 0 unused; ids are 1-based
};

/// Sum of the counters selected by the phase filter.
std::uint64_t ledger_total(const MessageLedger& ledger, bool (*phase_filter)(Phase));

}  // namespace damp
