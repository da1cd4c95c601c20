#include <cmath>

#include "damp/damp_run.hpp"
#include "damp/rng.hpp"
#include "doctest.h"
#include "test_support.hpp"

using damp::DampOptions;
using damp::Network;
using damp::Partition;
using damp::ProblemInstance;
using damp::ProtocolKind;
using damp::SensorState;
using damp::TuningSchedule;
using damp::Vector;

namespace {

TuningSchedule small_schedule() {
  TuningSchedule s;
  s.tau_max = 3.0;
  s.delta_tau = 0.4;
  s.length = 6;
  s.max_inner_iters = 30;
  s.rel_tol = 0.01;
  return s;
}

}  // namespace

TEST_CASE("sensors own exact slices of the instance") {
  const auto inst = damp::generate_instance(40, 0.5, 0.2, 0.05, 5);
  const Partition part = damp::partition_rows(inst, 3);
  const auto sensors = damp::make_sensors(inst, part);
  REQUIRE(sensors.size() == 3);
  int row = 0;
  for (const SensorState& s : sensors) {
    CHECK(s.rows.begin == row);
    for (int i = 0; i < s.rows.size(); ++i) {
      CHECK(damp::bits_equal(s.y_local(i), inst.y(row + i)));
      CHECK(damp::bits_equal(s.z_local(i), inst.y(row + i)));
    }
    CHECK(s.sigma_p() == doctest::Approx(std::sqrt(s.z_sum_squares)));
    row = s.rows.end;
  }
}

TEST_CASE("local contributions: zero residual and aggregator offset") {
  const auto inst = damp::generate_instance(30, 0.5, 0.3, 0.02, 6);
  const Partition part = damp::partition_rows(inst, 3);
  auto sensors = damp::make_sensors(inst, part);

  Vector x = Vector::Zero(inst.N());
  x(2) = 1.5;
  x(10) = -0.5;

  sensors[1].z_local.setZero();
  const Vector w2 = damp::local_compute_w(sensors[1], x);
  CHECK(w2.isZero(0.0));

  sensors[0].z_local.setZero();
  const Vector w1 = damp::local_compute_w(sensors[0], x);
  CHECK(damp::bits_equal(w1, x));
}

TEST_CASE("summed contributions equal the centralized pseudo-data bit for bit") {
  const auto inst = damp::generate_instance(50, 0.4, 0.25, 0.05, 7);
  const Partition part = damp::partition_rows(inst, 4);
  auto sensors = damp::make_sensors(inst, part);

  damp::Rng rng(88, "w_test");
  Vector x(inst.N());
  for (int n = 0; n < inst.N(); ++n) {
    x(n) = rng.uniform01() < 0.3 ? rng.normal() : 0.0;
  }
  Vector z(inst.M());
  for (int m = 0; m < inst.M(); ++m) z(m) = rng.normal();
  for (auto& s : sensors) {
    s.z_local = z.segment(s.rows.begin, s.rows.size());
  }

  Vector total = damp::local_compute_w(sensors[0], x);
  for (std::size_t p = 1; p < sensors.size(); ++p) {
    total += damp::local_compute_w(sensors[p], x);
  }

  // Centralized pseudo-data with the same block grouping.
  Vector pseudo = damp::block_transpose_product(inst.A, part.row_ranges[0], z);
  pseudo = x + pseudo;
  for (std::size_t b = 1; b < part.row_ranges.size(); ++b) {
    pseudo += damp::block_transpose_product(inst.A, part.row_ranges[b], z);
  }
  REQUIRE(damp::bits_equal(total, pseudo));
}

TEST_CASE("residual updates match the centralized recursion slice by slice") {
  const auto inst = damp::generate_instance(48, 0.5, 0.25, 0.03, 8);
  const Partition part = damp::partition_rows(inst, 4);
  auto sensors = damp::make_sensors(inst, part);

  // Zero estimate: both correction terms vanish and z returns to y.
  for (auto& s : sensors) {
    damp::local_update_z(s, Vector::Zero(inst.N()), 0, inst.M());
    for (int i = 0; i < s.rows.size(); ++i) {
      CHECK(damp::bits_equal(s.z_local(i), s.y_local(i)));
    }
  }

  // One centralized step against the distributed one, all slices bitwise.
  damp::AmpState oracle = damp::make_initial_state(inst.A, inst.y, part.blocks());
  const damp::AmpState next = damp::amp_step(oracle, inst.A, inst.y, 2.0, part.blocks());

  std::vector<Vector> w;
  for (const auto& s : sensors) w.push_back(damp::local_compute_w(s, oracle.x));
  const Vector x_next = [&] {
    Vector total = w[0];
    for (std::size_t p = 1; p < w.size(); ++p) total += w[p];
    Vector x(total.size());
    const double beta = 2.0 * oracle.sigma;
    for (int n = 0; n < total.size(); ++n) x(n) = damp::soft_threshold(total(n), beta);
    return x;
  }();
  const int l0 = damp::count_nonzero(x_next);
  for (auto& s : sensors) damp::local_update_z(s, x_next, l0, inst.M());

  REQUIRE(damp::bits_equal(x_next, next.x));
  for (const auto& s : sensors) {
    for (int i = 0; i < s.rows.size(); ++i) {
      REQUIRE(damp::bits_equal(s.z_local(i), next.z(s.rows.begin + i)));
    }
  }
}

TEST_CASE("single-sensor updates reduce to the centralized recursion") {
  const auto inst = damp::generate_instance(25, 0.6, 0.3, 0.02, 9);
  const Partition part = damp::partition_rows(inst, 1);
  auto sensors = damp::make_sensors(inst, part);

  damp::AmpState state = damp::make_initial_state(inst.A, inst.y);
  const damp::AmpState next = damp::amp_step(state, inst.A, inst.y, 2.5);

  const Vector w = damp::local_compute_w(sensors[0], state.x);
  Vector x_next(inst.N());
  const double beta = 2.5 * state.sigma;
  for (int n = 0; n < inst.N(); ++n) x_next(n) = damp::soft_threshold(w(n), beta);
  damp::local_update_z(sensors[0], x_next, damp::count_nonzero(x_next), inst.M());

  REQUIRE(damp::bits_equal(x_next, next.x));
  REQUIRE(damp::bits_equal(sensors[0].z_local, next.z));
}

TEST_CASE("sigma aggregation combines squared norms exactly") {
  const auto inst = damp::generate_instance(36, 0.5, 0.25, 0.04, 10);
  const Partition part = damp::partition_rows(inst, 3);
  auto sensors = damp::make_sensors(inst, part);

  Network net(3);
  const double sigma = damp::aggregate_sigma(sensors, inst.M(), net, 3.0, 0.8);
  CHECK(damp::bits_equal(sigma, damp::sigma_estimate(inst.y, inst.M(), part.blocks())));
  CHECK(net.ledger().count(damp::Phase::SigmaAggregate, damp::Kind::Scalar) == 2);
  CHECK(net.ledger().count(damp::Phase::ThresholdUpdate, damp::Kind::Scalar) == 1);
  CHECK(net.ledger().compute_x_total() == 0);

  // All-zero residuals aggregate to zero.
  for (auto& s : sensors) {
    s.z_local.setZero();
    s.z_sum_squares = 0.0;
  }
  Network net2(3);
  CHECK(damp::aggregate_sigma(sensors, inst.M(), net2, 3.0, 0.8) == 0.0);

  // Single sensor: no messages, plain norm.
  const Partition whole = damp::partition_rows(inst, 1);
  auto solo = damp::make_sensors(inst, whole);
  Network net3(1);
  const double sigma_solo = damp::aggregate_sigma(solo, inst.M(), net3, 3.0, 0.8);
  CHECK(damp::bits_equal(sigma_solo, damp::sigma_estimate(inst.y, inst.M())));
  CHECK(net3.ledger().total() == 0);
}

TEST_CASE("a single-sensor naive run is the centralized tuning loop") {
  const auto inst = damp::generate_instance(80, 0.5, 0.2, 0.02, 11);
  const Partition part = damp::partition_rows(inst, 1);
  const TuningSchedule schedule = small_schedule();

  Network net(1);
  const auto report =
      damp::run_damp(inst, part, schedule, ProtocolKind::Naive, net, DampOptions{});
  const auto tuned = damp::tune_tau(schedule, inst.A, inst.y);

  CHECK(report.tuned.tau_star == tuned.solution.tau_star);
  REQUIRE(damp::bits_equal(report.tuned.sigma_star, tuned.solution.sigma_star));
  REQUIRE(damp::bits_equal(report.tuned.x_star, tuned.solution.x_star));
  CHECK(report.selected_candidate == tuned.selected_candidate);
  CHECK(report.stopped_on_increase == tuned.stopped_on_increase);
  CHECK(net.ledger().total() == 0);
  CHECK(report.samples.size() == static_cast<std::size_t>(report.total_inner_iterations));
}

TEST_CASE("distributed runs stay in lockstep with the centralized twin") {
  DampOptions options;
  options.audit_equivalence = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto inst = damp::generate_instance(200, 0.2, 0.1, 0.02, seed);
    const Partition part = damp::partition_rows(inst, 4);
    const ProtocolKind kinds[] = {ProtocolKind::Gcamp, ProtocolKind::ModifiedTa,
                                  ProtocolKind::Naive};
    const auto report = damp::run_damp(inst, part, small_schedule(), kinds, options);
    CHECK(report.audited);
    CHECK(report.equivalence_ok);
  }
}

TEST_CASE("per-iteration ledgers are complete") {
  const auto inst = damp::generate_instance(150, 0.3, 0.15, 0.03, 21);
  const Partition part = damp::partition_rows(inst, 5);
  const ProtocolKind kinds[] = {ProtocolKind::Gcamp, ProtocolKind::ModifiedTa};
  const auto report = damp::run_damp(inst, part, small_schedule(), kinds, DampOptions{});
  REQUIRE_FALSE(report.samples.empty());
  for (const auto& sample : report.samples) {
    for (const auto& stats : sample.per_protocol) {
      const std::uint64_t compute = stats.ledger.compute_x_total();
      const std::uint64_t expected_total =
          compute + (part.P - 1) + 1 + static_cast<std::uint64_t>(sample.l0);
      CHECK(stats.ledger.total() == expected_total);
      CHECK(stats.mu_m ==
            static_cast<double>(compute) / (inst.N() * static_cast<double>(part.P - 1)));
    }
  }
}

TEST_CASE("the first iterations produce sparse estimates") {
  const auto inst = damp::generate_instance(2000, 0.2, 0.1, 0.02, 33);
  const Partition part = damp::partition_rows(inst, 4);
  TuningSchedule schedule;  // tau_max = 3 defaults
  const ProtocolKind kinds[] = {ProtocolKind::Gcamp};
  const auto report = damp::run_damp(inst, part, schedule, kinds, DampOptions{});
  REQUIRE_FALSE(report.samples.empty());
  const double bound = inst.N() * inst.kappa * inst.rho * 3.0;
  CHECK(report.samples.front().l0 < bound);
}

TEST_CASE("run_damp validates its inputs") {
  const auto inst = damp::generate_instance(30, 0.5, 0.2, 0.02, 3);
  const Partition part = damp::partition_rows(inst, 1);
  const TuningSchedule schedule = small_schedule();
  const ProtocolKind gcamp[] = {ProtocolKind::Gcamp};
  CHECK_THROWS_AS(damp::run_damp(inst, part, schedule, gcamp, DampOptions{}),
                  std::invalid_argument);

  Network wrong(2);
  CHECK_THROWS_AS(
      damp::run_damp(inst, part, schedule, ProtocolKind::Naive, wrong, DampOptions{}),
      std::invalid_argument);
}

TEST_CASE("iteration caps are reported, not thrown") {
  const auto inst = damp::generate_instance(100, 0.3, 0.2, 0.02, 12);
  const Partition part = damp::partition_rows(inst, 2);
  TuningSchedule schedule = small_schedule();
  schedule.max_inner_iters = 1;  // far too few to converge
  const ProtocolKind kinds[] = {ProtocolKind::Gcamp};
  const auto report = damp::run_damp(inst, part, schedule, kinds, DampOptions{});
  CHECK_FALSE(report.all_candidates_converged);
  for (const auto& c : report.candidates) {
    CHECK(c.iterations == 1);
  }
}
