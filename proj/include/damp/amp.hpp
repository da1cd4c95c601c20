#pragma once

#include <span>
#include <vector>

#include "damp/linalg.hpp"

namespace damp {

/// Iterate of the AMP recursion: estimate x, residual z, noise level sigma.
struct AmpState {
  Vector x;
  Vector z;
  double sigma = 0.0;
  int iter = 0;
};

/// Descending threshold-multiplier candidate list plus the inner-loop limits.
/// Candidate i (1-based) is tau_max - (i-1) * delta_tau.
struct TuningSchedule {
  double tau_max = 3.0;
  double delta_tau = 0.2;
  int length = 11;
  int max_inner_iters = 30;
  double rel_tol = 0.01;

  double candidate(int i) const { return tau_max - (i - 1) * delta_tau; }
  void validate() const;  // throws std::invalid_argument naming the bad field
};

struct TunedSolution {
  double tau_star = 0.0;
  double sigma_star = 0.0;
  Vector x_star;
};

/// eta(x; beta): zero when |x| <= beta, otherwise (|x| - beta) * sgn(x).
double soft_threshold(double x, double beta);

/// sqrt(||z||^2 / M), sum of squares accumulated in ascending index order.
double sigma_estimate(const Vector& z, int M);
/// Same value but with the sum of squares grouped by the given row blocks.
double sigma_estimate(const Vector& z, int M, std::span<const RowRange> grouping);

/// Convergence test |cur - prev| < rel_tol * prev; an exact 0 -> 0 transition
/// counts as converged (the strict inequality can never fire at zero).
bool sigma_converged(double current, double previous, double rel_tol);

/// x = 0, z = y, sigma from y; the standard starting point of the recursion.
AmpState make_initial_state(const Matrix& A, const Vector& y,
                            std::span<const RowRange> grouping = {});

/// One AMP iteration:
///   x' = eta(x + A^T z; tau * sigma)
///   z' = y - A x' + (||x'||_0 / M) z
///   sigma' = sqrt(||z'||^2 / M)
/// `grouping` fixes how row sums are blocked (default: one block covering all
/// rows). A run over a sensor partition reproduces these iterates bit for bit
/// when given the same grouping.
AmpState amp_step(const AmpState& state, const Matrix& A, const Vector& y,
                  double tau, std::span<const RowRange> grouping = {});

struct FixedTauResult {
  AmpState state;
  bool converged = false;
  int iterations = 0;
};

/// Iterates amp_step until the sigma test fires or max_inner_iters is hit.
/// Non-convergence is reported in the flag, never thrown.
FixedTauResult run_fixed_tau(AmpState state, const Matrix& A, const Vector& y,
                             double tau, int max_inner_iters, double rel_tol,
                             std::span<const RowRange> grouping = {});

/// Stop once a candidate's converged sigma strictly exceeds the previous
/// candidate's. Seed `sigma_previous` with +infinity for the first candidate.
bool tuning_should_stop(double sigma_candidate, double sigma_previous);

struct TuneCandidateRecord {
  double tau = 0.0;
  AmpState start;
  AmpState end;
  bool converged = false;
  int iterations = 0;
};

struct TuneResult {
  TunedSolution solution;
  std::vector<TuneCandidateRecord> candidates;  // one per executed candidate
  int selected_candidate = 0;                   // 1-based index of tau_star
  bool stopped_on_increase = false;
};

/// Walks the candidate list in descending order, warm-starting each candidate
/// from the previous one's converged state; returns the candidate preceding
/// the first sigma increase (or the last candidate if sigma never increases).
TuneResult tune_tau(const TuningSchedule& schedule, const Matrix& A,
                    const Vector& y, std::span<const RowRange> grouping = {});

/// Upper alpha/2 standard-normal quantile, accurate to well under 1e-6.
double tau_max_from_alpha(double alpha);

/// Phi^{-1}(p) for p in (0, 1): rational approximation plus one Halley step.
double standard_normal_quantile(double p);

}  // namespace damp
