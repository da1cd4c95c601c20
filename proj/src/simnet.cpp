#include "damp/simnet.hpp"

#include <ostream>
#include <stdexcept>
#include <string>

namespace damp {

namespace {

std::size_t slot(Phase phase, Kind kind) {
  return static_cast<std::size_t>(phase) * kKindCount + static_cast<std::size_t>(kind);
}

}  // namespace

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::GcampStep1: return "gcamp_step1";
    case Phase::GcampStep2: return "gcamp_step2";
    case Phase::GcampStep3: return "gcamp_step3";
    case Phase::TaSummation: return "ta_summation";
    case Phase::NaiveGather: return "naive_gather";
    case Phase::SigmaAggregate: return "sigma_aggregate";
    case Phase::ThresholdUpdate: return "threshold_update";
    case Phase::XBroadcast: return "x_broadcast";
  }
  return "unknown";
}

const char* to_string(Kind kind) {
  switch (kind) {
    case Kind::Pair: return "pair";
    case Kind::IndexBroadcast: return "index_broadcast";
    case Kind::Scalar: return "scalar";
    case Kind::NonzeroBroadcast: return "nonzero_broadcast";
  }
  return "unknown";
}

void MessageLedger::record(Phase phase, Kind kind, std::uint64_t count) {
  counts_[slot(phase, kind)] += count;
}

std::uint64_t MessageLedger::count(Phase phase, Kind kind) const {
  return counts_[slot(phase, kind)];
}

std::uint64_t MessageLedger::phase_total(Phase phase) const {
  std::uint64_t total = 0;
  for (int k = 0; k < kKindCount; ++k) {
    total += counts_[slot(phase, static_cast<Kind>(k))];
  }
  return total;
}

std::uint64_t MessageLedger::total() const {
  std::uint64_t total = 0;
  for (std::uint64_t c : counts_) total += c;
  return total;
}

std::uint64_t MessageLedger::compute_x_total() const {
  std::uint64_t total = 0;
  for (int p = 0; p < kPhaseCount; ++p) {
    const Phase phase = static_cast<Phase>(p);
    if (phase_counts_toward_x(phase)) total += phase_total(phase);
  }
  return total;
}

void MessageLedger::write_csv(std::ostream& out, bool include_zero_rows) const {
  out << "phase,kind,count\n";
  for (int p = 0; p < kPhaseCount; ++p) {
    for (int k = 0; k < kKindCount; ++k) {
      const std::uint64_t c = counts_[slot(static_cast<Phase>(p), static_cast<Kind>(k))];
      if (c == 0 && !include_zero_rows) continue;
      out << to_string(static_cast<Phase>(p)) << ',' << to_string(static_cast<Kind>(k))
          << ',' << c << '\n';
    }
  }
}

MessageLedger operator-(MessageLedger a, const MessageLedger& b) {
  for (std::size_t i = 0; i < a.counts_.size(); ++i) {
    if (b.counts_[i] > a.counts_[i]) {
      throw std::logic_error("MessageLedger: subtraction would go negative");
    }
    a.counts_[i] -= b.counts_[i];
  }
  return a;
}

std::uint64_t ledger_total(const MessageLedger& ledger, bool (*phase_filter)(Phase)) {
  std::uint64_t total = 0;
  for (int p = 0; p < kPhaseCount; ++p) {
    const Phase phase = static_cast<Phase>(p);
    if (phase_filter == nullptr || phase_filter(phase)) {
      total += ledger.phase_total(phase);
    }
  }
  return total;
}

Network::Network(int node_count) : node_count_(node_count) {
  if (node_count < 1) {
    throw std::invalid_argument("Network: node count must be at least 1");
  }
  inboxes_.resize(static_cast<std::size_t>(node_count) + 1);
}

void Network::check_node(int node) const {
  if (node < 1 || node > node_count_) {
    throw std::out_of_range("Network: unknown node id " + std::to_string(node));
  }
}

void Network::deliver_to_all_except(int from, const Message& message) {
  for (int node = 1; node <= node_count_; ++node) {
    if (node != from) inboxes_[node].push_back(message);
  }
}

void Network::send_pair(int from, int to, int index, double value) {
  check_node(from);
  check_node(to);
  if (from == to) throw std::invalid_argument("Network: node cannot send to itself");
  inboxes_[to].push_back(Message{from, index, value, Kind::Pair});
  ledger_.record(phase_, Kind::Pair);
}

void Network::send_scalar(int from, int to, double value) {
  check_node(from);
  check_node(to);
  if (from == to) throw std::invalid_argument("Network: node cannot send to itself");
  inboxes_[to].push_back(Message{from, -1, value, Kind::Scalar});
  ledger_.record(phase_, Kind::Scalar);
}

void Network::broadcast_index(int from, int index) {
  check_node(from);
  deliver_to_all_except(from, Message{from, index, 0.0, Kind::IndexBroadcast});
  ledger_.record(phase_, Kind::IndexBroadcast);
}

void Network::broadcast_pair(int from, int index, double value) {
  check_node(from);
  deliver_to_all_except(from, Message{from, index, value, Kind::Pair});
  ledger_.record(phase_, Kind::Pair);
}

void Network::broadcast_scalar(int from, double value) {
  check_node(from);
  deliver_to_all_except(from, Message{from, -1, value, Kind::Scalar});
  ledger_.record(phase_, Kind::Scalar);
}

void Network::broadcast_nonzeros(int from,
                                 const std::vector<std::pair<int, double>>& entries) {
  check_node(from);
  for (const auto& [index, value] : entries) {
    deliver_to_all_except(from, Message{from, index, value, Kind::NonzeroBroadcast});
  }
  ledger_.record(phase_, Kind::NonzeroBroadcast, entries.size());
}

bool Network::try_receive(int node, Message& out) {
  check_node(node);
  auto& box = inboxes_[node];
  if (box.empty()) return false;
  out = box.front();
  box.pop_front();
  return true;
}

std::size_t Network::pending(int node) const {
  check_node(node);
  return inboxes_[node].size();
}

}  // namespace damp
