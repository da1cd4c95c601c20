#include "damp/problem.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "damp/rng.hpp"

namespace damp {

namespace {

constexpr char kMagic[8] = {'D', 'A', 'M', 'P', 'I', 'N', 'S', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

void write_raw(std::ofstream& out, const void* data, std::size_t bytes) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

void read_raw(std::ifstream& in, void* data, std::size_t bytes,
              const std::filesystem::path& path, const char* what) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
  if (!in) {
    throw std::runtime_error(path.string() + ": truncated while reading " + what);
  }
}

}  // namespace

int measurement_count(int N, double kappa) {
  return static_cast<int>(std::llround(kappa * static_cast<double>(N)));
}

ProblemInstance generate_instance(int N, double kappa, double rho,
                                  double noise_sigma, std::uint64_t seed) {
  if (N < 1) throw std::invalid_argument("generate_instance: N must be at least 1");
  if (!(kappa > 0.0 && kappa <= 1.0)) {
    throw std::invalid_argument("generate_instance: kappa must be in (0, 1]");
  }
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("generate_instance: rho must be in (0, 1]");
  }
  if (!(noise_sigma >= 0.0)) {
    throw std::invalid_argument("generate_instance: noise_sigma must be nonnegative");
  }
  const int M = measurement_count(N, kappa);
  if (M < 1) {
    throw std::invalid_argument("generate_instance: kappa * N rounds to zero measurements");
  }

  ProblemInstance inst;
  inst.noise_sigma = noise_sigma;
  inst.kappa = kappa;
  inst.rho = rho;
  inst.seed = seed;

  Rng rng_signal(seed, "s0");
  const double activity = kappa * rho;
  inst.s0 = Vector::Zero(N);
  for (int n = 0; n < N; ++n) {
    if (rng_signal.uniform01() < activity) {
      inst.s0(n) = rng_signal.normal();
    }
  }

  Rng rng_matrix(seed, "A");
  const double scale = 1.0 / std::sqrt(static_cast<double>(M));
  inst.A.resize(M, N);
  for (int n = 0; n < N; ++n) {  // column-major fill order
    for (int m = 0; m < M; ++m) {
      inst.A(m, n) = rng_matrix.normal() * scale;
    }
  }

  Rng rng_noise(seed, "noise");
  const Vector clean = block_product(inst.A, RowRange{0, M}, inst.s0);
  inst.y.resize(M);
  for (int m = 0; m < M; ++m) {
    inst.y(m) = clean(m) + noise_sigma * rng_noise.normal();
  }
  return inst;
}

Partition partition_rows(int M, int P) {
  if (M < 1) throw std::invalid_argument("partition_rows: M must be at least 1");
  if (P < 1 || P > M) {
    throw std::invalid_argument("partition_rows: P must be in [1, M]");
  }
  Partition part;
  part.P = P;
  part.row_ranges.reserve(P);
  const int base = M / P;
  const int remainder = M % P;
  int begin = 0;
  for (int p = 0; p < P; ++p) {
    const int size = base + (p < remainder ? 1 : 0);
    part.row_ranges.push_back(RowRange{begin, begin + size});
    begin += size;
  }
  return part;
}

Partition partition_rows(const ProblemInstance& instance, int P) {
  return partition_rows(instance.M(), P);
}

void save_instance(const ProblemInstance& instance, int P,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  const std::uint64_t N = static_cast<std::uint64_t>(instance.N());
  const std::uint64_t M = static_cast<std::uint64_t>(instance.M());
  const std::uint64_t P64 = static_cast<std::uint64_t>(P);
  write_raw(out, kMagic, sizeof(kMagic));
  write_raw(out, &kFormatVersion, sizeof(kFormatVersion));
  write_raw(out, &N, sizeof(N));
  write_raw(out, &M, sizeof(M));
  write_raw(out, &P64, sizeof(P64));
  write_raw(out, &instance.kappa, sizeof(double));
  write_raw(out, &instance.rho, sizeof(double));
  write_raw(out, &instance.noise_sigma, sizeof(double));
  write_raw(out, &instance.seed, sizeof(std::uint64_t));
  write_raw(out, instance.s0.data(), sizeof(double) * instance.s0.size());
  write_raw(out, instance.A.data(), sizeof(double) * instance.A.size());
  write_raw(out, instance.y.data(), sizeof(double) * instance.y.size());
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

LoadedInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open for reading");
  char magic[8];
  read_raw(in, magic, sizeof(magic), path, "magic");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path.string() + ": not an instance file (bad magic)");
  }
  std::uint32_t version = 0;
  read_raw(in, &version, sizeof(version), path, "version");
  if (version != kFormatVersion) {
    throw std::runtime_error(path.string() + ": unsupported format version " +
                             std::to_string(version));
  }
  std::uint64_t N = 0, M = 0, P = 0;
  read_raw(in, &N, sizeof(N), path, "N");
  read_raw(in, &M, sizeof(M), path, "M");
  read_raw(in, &P, sizeof(P), path, "P");
  if (N < 1 || M < 1 || P < 1 || P > M) {
    throw std::runtime_error(path.string() + ": inconsistent header dimensions");
  }
  LoadedInstance loaded;
  loaded.P = static_cast<int>(P);
  ProblemInstance& inst = loaded.instance;
  read_raw(in, &inst.kappa, sizeof(double), path, "kappa");
  read_raw(in, &inst.rho, sizeof(double), path, "rho");
  read_raw(in, &inst.noise_sigma, sizeof(double), path, "noise_sigma");
  read_raw(in, &inst.seed, sizeof(std::uint64_t), path, "seed");
  inst.s0.resize(static_cast<int>(N));
  inst.A.resize(static_cast<int>(M), static_cast<int>(N));
  inst.y.resize(static_cast<int>(M));
  read_raw(in, inst.s0.data(), sizeof(double) * N, path, "s0");
  read_raw(in, inst.A.data(), sizeof(double) * M * N, path, "A");
  read_raw(in, inst.y.data(), sizeof(double) * M, path, "y");
  return loaded;
}

}  // namespace damp
