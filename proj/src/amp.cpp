#include "damp/amp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace damp {

namespace {

std::vector<RowRange> whole_range(int M) { return {RowRange{0, M}}; }

void check_grouping(std::span<const RowRange> grouping, int M) {
  if (grouping.empty()) return;
  int expected = 0;
  for (const RowRange& r : grouping) {
    if (r.begin != expected || r.end < r.begin) {
      throw std::invalid_argument("grouping: blocks must be contiguous and ordered");
    }
    expected = r.end;
  }
  if (expected != M) {
    throw std::invalid_argument("grouping: blocks must cover all rows");
  }
}

}  // namespace

void TuningSchedule::validate() const {
  if (!(tau_max > 0.0)) throw std::invalid_argument("tau_max must be positive");
  if (!(delta_tau > 0.0)) throw std::invalid_argument("delta_tau must be positive");
  if (length < 1) throw std::invalid_argument("length must be at least 1");
  if (max_inner_iters < 1) throw std::invalid_argument("max_inner_iters must be at least 1");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be positive");
  if (!(candidate(length) > 0.0)) {
    throw std::invalid_argument("tau_max/delta_tau/length: last candidate must stay positive");
  }
}

double soft_threshold(double x, double beta) {
  const double ax = std::abs(x);
  if (ax <= beta) return 0.0;
  const double mag = ax - beta;
  return x < 0.0 ? -mag : mag;
}

double sigma_estimate(const Vector& z, int M) {
  if (M <= 0) throw std::invalid_argument("sigma_estimate: M must be positive");
  if (z.size() != M) throw std::invalid_argument("sigma_estimate: z length must equal M");
  const double ssq[] = {sum_squares(z)};
  return combine_sigma(ssq, M);
}

double sigma_estimate(const Vector& z, int M, std::span<const RowRange> grouping) {
  if (grouping.empty()) return sigma_estimate(z, M);
  if (M <= 0) throw std::invalid_argument("sigma_estimate: M must be positive");
  if (z.size() != M) throw std::invalid_argument("sigma_estimate: z length must equal M");
  check_grouping(grouping, M);
  std::vector<double> ssq;
  ssq.reserve(grouping.size());
  for (const RowRange& r : grouping) {
    ssq.push_back(sum_squares(z, r));
  }
  return combine_sigma(ssq, M);
}

bool sigma_converged(double current, double previous, double rel_tol) {
  if (current == 0.0 && previous == 0.0) return true;
  return std::abs(current - previous) < rel_tol * previous;
}

AmpState make_initial_state(const Matrix& A, const Vector& y,
                            std::span<const RowRange> grouping) {
  const int M = static_cast<int>(A.rows());
  const int N = static_cast<int>(A.cols());
  if (y.size() != M) throw std::invalid_argument("make_initial_state: y length must equal row count");
  AmpState state;
  state.x = Vector::Zero(N);
  state.z = y;
  state.sigma = sigma_estimate(state.z, M, grouping);
  state.iter = 0;
  return state;
}

AmpState amp_step(const AmpState& state, const Matrix& A, const Vector& y,
                  double tau, std::span<const RowRange> grouping) {
  const int M = static_cast<int>(A.rows());
  const int N = static_cast<int>(A.cols());
  if (state.x.size() != N || state.z.size() != M || y.size() != M) {
    throw std::invalid_argument("amp_step: dimension mismatch");
  }
  std::vector<RowRange> fallback;
  if (grouping.empty()) {
    fallback = whole_range(M);
    grouping = fallback;
  } else {
    check_grouping(grouping, M);
  }

  // x + A^T z, block results combined in ascending block order; the first
  // block's product is added onto x before the others join.
  Vector pseudo = block_transpose_product(A, grouping[0], state.z);
  pseudo = state.x + pseudo;
  for (std::size_t b = 1; b < grouping.size(); ++b) {
    pseudo += block_transpose_product(A, grouping[b], state.z);
  }

  const double beta = tau * state.sigma;
  Vector x_next(N);
  for (int n = 0; n < N; ++n) {
    x_next(n) = soft_threshold(pseudo(n), beta);
  }

  const int l0 = count_nonzero(x_next);
  const double onsager = static_cast<double>(l0) / static_cast<double>(M);

  Vector z_next(M);
  std::vector<double> block_ssq;
  block_ssq.reserve(grouping.size());
  for (const RowRange& r : grouping) {
    const Vector ax = block_product(A, r, x_next);
    for (int i = r.begin; i < r.end; ++i) {
      z_next(i) = residual_update(y(i), ax(i - r.begin), onsager, state.z(i));
    }
    block_ssq.push_back(sum_squares(z_next, r));
  }

  AmpState next;
  next.x = std::move(x_next);
  next.z = std::move(z_next);
  next.sigma = combine_sigma(block_ssq, M);
  next.iter = state.iter + 1;
  return next;
}

FixedTauResult run_fixed_tau(AmpState state, const Matrix& A, const Vector& y,
                             double tau, int max_inner_iters, double rel_tol,
                             std::span<const RowRange> grouping) {
  FixedTauResult result;
  for (int t = 1; t <= max_inner_iters; ++t) {
    const double sigma_prev = state.sigma;
    state = amp_step(state, A, y, tau, grouping);
    ++result.iterations;
    if (sigma_converged(state.sigma, sigma_prev, rel_tol)) {
      result.converged = true;
      break;
    }
  }
  result.state = std::move(state);
  return result;
}

bool tuning_should_stop(double sigma_candidate, double sigma_previous) {
  return sigma_candidate > sigma_previous;
}

TuneResult tune_tau(const TuningSchedule& schedule, const Matrix& A,
                    const Vector& y, std::span<const RowRange> grouping) {
  schedule.validate();
  TuneResult result;
  AmpState state = make_initial_state(A, y, grouping);
  double sigma_previous = std::numeric_limits<double>::infinity();

  for (int i = 1; i <= schedule.length; ++i) {
    const double tau = schedule.candidate(i);
    TuneCandidateRecord record;
    record.tau = tau;
    record.start = state;
    FixedTauResult fixed = run_fixed_tau(state, A, y, tau, schedule.max_inner_iters,
                                         schedule.rel_tol, grouping);
    record.end = fixed.state;
    record.converged = fixed.converged;
    record.iterations = fixed.iterations;
    result.candidates.push_back(std::move(record));

    if (tuning_should_stop(fixed.state.sigma, sigma_previous)) {
      result.stopped_on_increase = true;
      break;
    }
    state = std::move(fixed.state);
    result.solution = TunedSolution{tau, state.sigma, state.x};
    result.selected_candidate = i;
    sigma_previous = state.sigma;
  }
  return result;
}

double standard_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("standard_normal_quantile: p must be in (0, 1)");
  }
  // Rational approximation (Acklam), then one Halley refinement against the
  // erfc-based CDF; the result is accurate to roughly machine precision.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  constexpr double p_high = 1.0 - p_low;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= p_high) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  const double cdf = 0.5 * std::erfc(-x / std::numbers::sqrt2);
  const double e = cdf - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

double tau_max_from_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("tau_max_from_alpha: alpha must be in (0, 1)");
  }
  // Upper alpha/2 quantile; the lower-tail branch is the numerically accurate
  // one for small alpha, so evaluate there and negate.
  return -standard_normal_quantile(alpha / 2.0);
}

}  // namespace damp
