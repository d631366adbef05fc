#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "cgmc/lattice.hpp"
#include "cgmc/potentials.hpp"

namespace cgmc::testing {

/// Independent closed-form mean energy of the periodic nearest-neighbor chain
/// (transfer-matrix eigenvalues, Bernoulli(1/2) prior).
inline double transfer_matrix_energy(int n, double coupling, double beta) {
  const double lp = std::exp(-beta * coupling) + std::exp(beta * coupling);
  const double lm = std::exp(-beta * coupling) - std::exp(beta * coupling);
  const double dlp = coupling * (std::exp(beta * coupling) - std::exp(-beta * coupling));
  const double dlm = -coupling * (std::exp(beta * coupling) + std::exp(-beta * coupling));
  const double zn = std::pow(lp, n) + std::pow(lm, n);
  return -(n * std::pow(lp, n - 1) * dlp + n * std::pow(lm, n - 1) * dlm) / zn;
}

inline ModelSpec short_model(double coupling, double beta = 1.0) {
  return ModelSpec::validated({coupling}, std::nullopt, beta);
}

inline ModelSpec mixed_model(double coupling, double beta, KernelShape shape, int range) {
  return ModelSpec::validated({coupling}, LongRangeModel::create(shape, range), beta);
}

inline SpinConfiguration random_spins(int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  SpinConfiguration sigma;
  sigma.spins.resize(static_cast<std::size_t>(n));
  for (auto& s : sigma.spins) s = (gen() >> 63) ? Spin{+1} : Spin{-1};
  return sigma;
}

inline CoarseConfiguration random_blocks(const LatticeGeometry& geo, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  CoarseConfiguration eta;
  eta.blocks.resize(static_cast<std::size_t>(geo.n_cells));
  for (auto& e : eta.blocks) {
    int sum = 0;
    for (int i = 0; i < geo.cell_size; ++i) sum += (gen() >> 63) ? +1 : -1;
    e = sum;
  }
  return eta;
}

/// Unique scratch directory under the system temp root.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("cgmc_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace cgmc::testing
