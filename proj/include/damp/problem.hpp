#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "damp/linalg.hpp"

namespace damp {

/// Synthetic sparse-recovery instance: ground truth s0, sensing matrix A with
/// i.i.d. N(0, 1/M) entries, measurement y = A s0 + noise.
struct ProblemInstance {
  Vector s0;
  Matrix A;
  Vector y;
  double noise_sigma = 0.0;
  double kappa = 0.0;  // M / N
  double rho = 0.0;    // K / M (expected)
  std::uint64_t seed = 0;

  int N() const { return static_cast<int>(s0.size()); }
  int M() const { return static_cast<int>(y.size()); }
};

/// Balanced contiguous split of [0, M) into P intervals; sizes differ by at
/// most one, larger blocks first.
struct Partition {
  int P = 1;
  std::vector<RowRange> row_ranges;

  std::span<const RowRange> blocks() const { return row_ranges; }
};

int measurement_count(int N, double kappa);  // round(kappa * N)

/// Deterministic generation: each s0(n) is standard normal with probability
/// kappa*rho and exactly zero otherwise; A(m,n) ~ N(0, 1/M); y = A s0 + n with
/// n ~ N(0, noise_sigma^2). The same seed reproduces the instance bit for bit.
/// Draws for s0, A and the noise come from independent tagged streams.
ProblemInstance generate_instance(int N, double kappa, double rho,
                                  double noise_sigma, std::uint64_t seed);

Partition partition_rows(int M, int P);
Partition partition_rows(const ProblemInstance& instance, int P);

/// Flat binary container (magic, version, N, M, P, kappa, rho, noise_sigma,
/// seed header followed by raw little-endian doubles for s0, A column-major,
/// y). Byte-stable across runs.
void save_instance(const ProblemInstance& instance, int P,
                   const std::filesystem::path& path);

struct LoadedInstance {
  ProblemInstance instance;
  int P = 1;
};

LoadedInstance load_instance(const std::filesystem::path& path);

}  // namespace damp
