#include "damp/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "damp/amp.hpp"

namespace damp {

namespace {

void check_inputs(const std::vector<Vector>& w, Network& net, int min_sensors,
                  const char* who) {
  const int P = static_cast<int>(w.size());
  if (P < min_sensors) {
    throw std::invalid_argument(std::string(who) + ": needs at least " +
                                std::to_string(min_sensors) + " sensors");
  }
  if (net.node_count() != P) {
    throw std::invalid_argument(std::string(who) + ": network size does not match sensor count");
  }
  for (const Vector& v : w) {
    if (v.size() != w[0].size()) {
      throw std::invalid_argument(std::string(who) + ": sensor vectors differ in length");
    }
  }
  if (w[0].size() < 1) {
    throw std::invalid_argument(std::string(who) + ": empty sensor vectors");
  }
}

}  // namespace

std::string to_string(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::Gcamp: return "gcamp";
    case ProtocolKind::ModifiedTa: return "ta";
    case ProtocolKind::Naive: return "naive";
  }
  return "unknown";
}

ProtocolKind parse_protocol(std::string_view name) {
  if (name == "gcamp") return ProtocolKind::Gcamp;
  if (name == "ta" || name == "modified_ta" || name == "modified-ta") {
    return ProtocolKind::ModifiedTa;
  }
  if (name == "naive") return ProtocolKind::Naive;
  throw std::invalid_argument("unknown protocol '" + std::string(name) +
                              "' (expected gcamp, ta or naive)");
}

double GcampParams::threshold_T(int P) const {
  if (P < 2) throw std::invalid_argument("GcampParams: threshold needs P >= 2");
  return beta * theta / static_cast<double>(P - 1);
}

void GcampParams::validate() const {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw std::invalid_argument("GcampParams: theta must be in (0, 1)");
  }
  if (!(beta >= 0.0)) {
    throw std::invalid_argument("GcampParams: beta must be nonnegative");
  }
}

std::uint64_t GcampTrace::sum_R() const {
  std::uint64_t total = 0;
  for (const auto& r : R_sets) total += r.size();
  return total;
}

std::uint64_t GcampTrace::sum_F_minus_R() const {
  std::uint64_t total = 0;
  const int P = static_cast<int>(R_sets.size()) - 1;
  for (int p = 2; p <= P; ++p) {
    for (int n : F) {
      if (!std::binary_search(R_sets[p].begin(), R_sets[p].end(), n)) ++total;
    }
  }
  return total;
}

GcampResult gcamp(const std::vector<Vector>& w, const GcampParams& params,
                  Network& net) {
  check_inputs(w, net, 2, "gcamp");
  params.validate();
  const int P = static_cast<int>(w.size());
  const int N = static_cast<int>(w[0].size());
  const double T = params.threshold_T(P);
  const MessageLedger before = net.ledger();

  GcampResult result;
  GcampTrace& trace = result.trace;
  trace.threshold_T = T;
  trace.R_sets.assign(P + 1, {});
  trace.m.assign(N, 0);
  trace.S.assign(N, {});

  // Step I: sensors 2..P report every entry above T to sensor 1.
  net.set_phase(Phase::GcampStep1);
  for (int p = 2; p <= P; ++p) {
    const Vector& wp = w[p - 1];
    for (int n = 0; n < N; ++n) {
      if (std::abs(wp(n)) > T) {
        trace.R_sets[p].push_back(n);
        net.send_pair(p, 1, n, wp(n));
      }
    }
  }

  // Sensor 1 files the reports. Arrival order is ascending p, so the S sets
  // come out already sorted.
  std::vector<double> received(static_cast<std::size_t>(P + 1) * N, 0.0);
  std::vector<char> have(static_cast<std::size_t>(P + 1) * N, 0);
  Message msg;
  while (net.try_receive(1, msg)) {
    const std::size_t at = static_cast<std::size_t>(msg.from) * N + msg.index;
    received[at] = msg.value;
    have[at] = 1;
    trace.S[msg.index].push_back(msg.from);
    ++trace.m[msg.index];
  }

  // Step II: bound each column sum from what arrived; indices that might still
  // clear beta but are incomplete get broadcast for completion.
  net.set_phase(Phase::GcampStep2);
  trace.upper_bounds.resize(N);
  for (int n = 0; n < N; ++n) {
    double partial = w[0](n);
    for (int p : trace.S[n]) {
      partial += received[static_cast<std::size_t>(p) * N + n];
    }
    const double slack = static_cast<double>(P - 1 - trace.m[n]) * T;
    const double bound = std::abs(partial) + slack;
    trace.upper_bounds(n) = bound;
    if (bound > params.beta) {
      trace.V.push_back(n);
      if (trace.m[n] < P - 1) {
        trace.F.push_back(n);
        net.broadcast_index(1, n);
      }
    }
  }

  // Step III: every sensor answers the broadcasts it did not already cover.
  net.set_phase(Phase::GcampStep3);
  for (int p = 2; p <= P; ++p) {
    Message request;
    while (net.try_receive(p, request)) {
      const int n = request.index;
      if (!(std::abs(w[p - 1](n)) > T)) {
        net.send_pair(p, 1, n, w[p - 1](n));
      }
    }
  }
  while (net.try_receive(1, msg)) {
    const std::size_t at = static_cast<std::size_t>(msg.from) * N + msg.index;
    received[at] = msg.value;
    have[at] = 1;
  }

  // Step IV: threshold the completed sums, ascending sensor order.
  result.x_next = Vector::Zero(N);
  for (int n : trace.V) {
    double total = w[0](n);
    for (int p = 2; p <= P; ++p) {
      const std::size_t at = static_cast<std::size_t>(p) * N + n;
      if (!have[at]) {
        throw std::logic_error("gcamp: missing value for an index above the bound");
      }
      total += received[at];
    }
    result.x_next(n) = soft_threshold(total, params.beta);
  }

  result.ledger = net.ledger() - before;
  return result;
}

double gcamp_upper_bound(int n, const std::vector<Vector>& w,
                         const GcampTrace& trace) {
  const int P = static_cast<int>(w.size());
  double partial = w[0](n);
  for (int p : trace.S[n]) {
    partial += w[p - 1](n);
  }
  const double slack = static_cast<double>(P - 1 - trace.m[n]) * trace.threshold_T;
  return std::abs(partial) + slack;
}

TaResult modified_ta(const std::vector<Vector>& w, double beta, Network& net) {
  check_inputs(w, net, 2, "modified_ta");
  if (!(beta >= 0.0)) throw std::invalid_argument("modified_ta: beta must be nonnegative");
  const int P = static_cast<int>(w.size());
  const int N = static_cast<int>(w[0].size());
  const MessageLedger before = net.ledger();
  net.set_phase(Phase::TaSummation);

  TaResult result;
  TaTrace& trace = result.trace;
  trace.sorted_order.assign(P + 1, {});
  trace.frontier_u.assign(P + 1, 0.0);
  trace.sent.assign(N, 0);

  // Each sensor orders its entries by descending magnitude; ties go to the
  // smaller index so the schedule is deterministic.
  for (int p = 1; p <= P; ++p) {
    auto& order = trace.sorted_order[p];
    order.resize(N);
    std::iota(order.begin(), order.end(), 0);
    const Vector& wp = w[p - 1];
    std::sort(order.begin(), order.end(), [&wp](int a, int b) {
      const double ma = std::abs(wp(a));
      const double mb = std::abs(wp(b));
      if (ma != mb) return ma > mb;
      return a < b;
    });
  }

  std::vector<int> pos(P + 1, 0);
  std::vector<double> values(P + 1, 0.0);
  result.x_next = Vector::Zero(N);
  std::int64_t summations = 0;
  bool done = false;

  while (!done) {
    for (int p = 1; p <= P && !done; ++p) {
      // Owner's frontier: first entry not yet consumed by any summation.
      auto& order = trace.sorted_order[p];
      int& k = pos[p];
      while (trace.sent[order[k]]) ++k;
      const int n = order[k];
      const double u_p = w[p - 1](n);
      net.broadcast_pair(p, n, u_p);
      trace.frontier_u[p] = u_p;
      trace.sent[n] = 1;
      ++k;

      // Peers consume the broadcast and reply with their value at n.
      for (int q = 1; q <= P; ++q) {
        if (q == p) continue;
        Message request;
        if (!net.try_receive(q, request)) {
          throw std::logic_error("modified_ta: expected a broadcast in the inbox");
        }
        net.send_pair(q, p, request.index, w[q - 1](request.index));
      }

      // Owner completes the sum in ascending sensor order.
      values[p] = u_p;
      Message reply;
      while (net.try_receive(p, reply)) {
        values[reply.from] = reply.value;
      }
      double total = values[1];
      for (int q = 2; q <= P; ++q) total += values[q];
      result.x_next(n) = soft_threshold(total, beta);

      ++summations;
      trace.history.push_back(TaSummationRecord{p, n, u_p});

      if (summations >= P) {
        double frontier_sum = 0.0;
        for (int q = 1; q <= P; ++q) frontier_sum += std::abs(trace.frontier_u[q]);
        if (frontier_sum <= beta) done = true;
      }
      if (summations >= N) done = true;
    }
  }

  trace.global_summations = summations;
  result.ledger = net.ledger() - before;
  return result;
}

NaiveResult naive_gather(const std::vector<Vector>& w, double beta, Network& net) {
  check_inputs(w, net, 1, "naive_gather");
  if (!(beta >= 0.0)) throw std::invalid_argument("naive_gather: beta must be nonnegative");
  const int P = static_cast<int>(w.size());
  const int N = static_cast<int>(w[0].size());
  const MessageLedger before = net.ledger();
  net.set_phase(Phase::NaiveGather);

  for (int p = 2; p <= P; ++p) {
    for (int n = 0; n < N; ++n) {
      net.send_pair(p, 1, n, w[p - 1](n));
    }
  }

  std::vector<double> received(static_cast<std::size_t>(P + 1) * N, 0.0);
  Message msg;
  while (net.try_receive(1, msg)) {
    received[static_cast<std::size_t>(msg.from) * N + msg.index] = msg.value;
  }

  NaiveResult result;
  result.x_next = Vector::Zero(N);
  for (int n = 0; n < N; ++n) {
    double total = w[0](n);
    for (int p = 2; p <= P; ++p) {
      total += received[static_cast<std::size_t>(p) * N + n];
    }
    result.x_next(n) = soft_threshold(total, beta);
  }
  result.ledger = net.ledger() - before;
  return result;
}

double nmn(const MessageLedger& ledger, int N, int P) {
  if (P < 2) throw std::invalid_argument("nmn: undefined for P < 2");
  if (N < 1) throw std::invalid_argument("nmn: N must be positive");
  return static_cast<double>(ledger.compute_x_total()) /
         (static_cast<double>(N) * static_cast<double>(P - 1));
}

ProtocolOutput run_protocol(ProtocolKind kind, const std::vector<Vector>& w,
                            double beta, double theta, Network& net) {
  ProtocolOutput out;
  switch (kind) {
    case ProtocolKind::Gcamp: {
      GcampResult r = gcamp(w, GcampParams{theta, beta}, net);
      out.x_next = std::move(r.x_next);
      out.ledger = r.ledger;
      out.summary.sum_R = r.trace.sum_R();
      out.summary.F_size = static_cast<int>(r.trace.F.size());
      out.summary.V_size = static_cast<int>(r.trace.V.size());
      break;
    }
    case ProtocolKind::ModifiedTa: {
      TaResult r = modified_ta(w, beta, net);
      out.x_next = std::move(r.x_next);
      out.ledger = r.ledger;
      out.summary.global_summations = r.trace.global_summations;
      break;
    }
    case ProtocolKind::Naive: {
      NaiveResult r = naive_gather(w, beta, net);
      out.x_next = std::move(r.x_next);
      out.ledger = r.ledger;
      break;
    }
  }
  return out;
}

}  // namespace damp
