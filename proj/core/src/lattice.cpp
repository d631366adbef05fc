#include "cgmc/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cgmc/stats.hpp"

namespace cgmc {

void CapacityPolicy::require_cell(int q) const {
  if (!accept_large && q > max_cell_sites) {
    throw CapacityError("cell enumeration over q=" + std::to_string(q) +
                        " sites exceeds the cap of " + std::to_string(max_cell_sites));
  }
}

void CapacityPolicy::require_triple(int q) const {
  if (!accept_large && q > max_triple_cell_sites) {
    throw CapacityError("three-cell enumeration over q=" + std::to_string(q) +
                        " sites exceeds the cap of " + std::to_string(max_triple_cell_sites));
  }
}

void CapacityPolicy::require_total(int n) const {
  if (!accept_large && n > max_total_sites) {
    throw CapacityError("full-state enumeration over N=" + std::to_string(n) +
                        " sites exceeds the cap of " + std::to_string(max_total_sites));
  }
}

LatticeGeometry LatticeGeometry::create(int n_sites, int cell_size) {
  if (n_sites <= 0 || cell_size <= 0) {
    throw ConfigError("lattice sizes must be positive");
  }
  if (n_sites % cell_size != 0) {
    throw ConfigError("N=" + std::to_string(n_sites) + " is not a multiple of q=" +
                      std::to_string(cell_size));
  }
  const int m = n_sites / cell_size;
  if (m % 2 != 0) {
    throw ConfigError("the cell count M=" + std::to_string(m) +
                      " must be even for the odd/even cell decomposition");
  }
  return {n_sites, cell_size, m};
}

bool block_value_admissible(int q, int eta) {
  return eta >= -q && eta <= q && ((eta + q) % 2 == 0);
}

void validate_coarse(const CoarseConfiguration& eta, const LatticeGeometry& geo) {
  if (eta.size() != geo.n_cells) {
    throw DomainError("coarse configuration has " + std::to_string(eta.size()) +
                      " blocks, expected " + std::to_string(geo.n_cells));
  }
  for (int k = 0; k < eta.size(); ++k) {
    if (!block_value_admissible(geo.cell_size, eta[k])) {
      throw DomainError("block value " + std::to_string(eta[k]) + " at cell " +
                        std::to_string(k) + " is not admissible for q=" +
                        std::to_string(geo.cell_size));
    }
  }
}

CoarseConfiguration coarse_map(const SpinConfiguration& sigma, const LatticeGeometry& geo) {
  if (sigma.size() != geo.n_sites) {
    throw ConfigError("spin configuration has " + std::to_string(sigma.size()) +
                      " sites, expected " + std::to_string(geo.n_sites));
  }
  CoarseConfiguration eta;
  eta.blocks.assign(static_cast<std::size_t>(geo.n_cells), 0);
  for (int k = 0; k < geo.n_cells; ++k) {
    int sum = 0;
    const int begin = geo.cell_begin(k);
    for (int i = 0; i < geo.cell_size; ++i) sum += sigma[begin + i];
    eta[k] = sum;
  }
  return eta;
}

double cell_log_prior(int q, int eta) {
  if (!block_value_admissible(q, eta)) {
    throw DomainError("block value " + std::to_string(eta) + " is not admissible for q=" +
                      std::to_string(q));
  }
  return log_binomial(q, (eta + q) / 2) - q * std::log(2.0);
}

double coarse_prior_log_weight(const CoarseConfiguration& eta, const LatticeGeometry& geo) {
  validate_coarse(eta, geo);
  KahanSum sum;
  for (int k = 0; k < eta.size(); ++k) sum.add(cell_log_prior(geo.cell_size, eta[k]));
  return sum.value();
}

std::uint64_t cell_config_count(int q, int eta) {
  if (!block_value_admissible(q, eta)) return 0;
  const int k = (eta + q) / 2;
  std::uint64_t c = 1;
  for (int i = 0; i < std::min(k, q - k); ++i) {
    c = c * static_cast<std::uint64_t>(q - i) / static_cast<std::uint64_t>(i + 1);
  }
  return c;
}

void for_each_cell_config(int q, int eta, const std::function<void(std::span<const Spin>)>& fn,
                          const CapacityPolicy& caps) {
  caps.require_cell(q);
  if (!block_value_admissible(q, eta)) {
    throw DomainError("block value " + std::to_string(eta) + " is not admissible for q=" +
                      std::to_string(q));
  }
  std::vector<Spin> cfg(static_cast<std::size_t>(q), Spin{-1});
  const int n_plus = (eta + q) / 2;
  std::fill(cfg.end() - n_plus, cfg.end(), Spin{+1});
  // lexicographic enumeration of the multiset permutations (-1 < +1)
  do {
    fn(std::span<const Spin>(cfg.data(), cfg.size()));
  } while (std::next_permutation(cfg.begin(), cfg.end()));
}

std::vector<std::vector<Spin>> enumerate_cell_configs(int q, int eta, const CapacityPolicy& caps) {
  std::vector<std::vector<Spin>> out;
  out.reserve(cell_config_count(q, eta));
  for_each_cell_config(
      q, eta, [&](std::span<const Spin> c) { out.emplace_back(c.begin(), c.end()); }, caps);
  return out;
}

void for_each_coarse_config(const LatticeGeometry& geo,
                            const std::function<void(const CoarseConfiguration&)>& fn) {
  const int q = geo.cell_size;
  CoarseConfiguration eta;
  eta.blocks.assign(static_cast<std::size_t>(geo.n_cells), -q);
  while (true) {
    fn(eta);
    int k = 0;
    while (k < geo.n_cells) {
      if (eta[k] < q) {
        eta[k] += 2;
        break;
      }
      eta[k] = -q;
      ++k;
    }
    if (k == geo.n_cells) break;
  }
}

std::size_t coarse_index(const CoarseConfiguration& eta, const LatticeGeometry& geo) {
  const int q = geo.cell_size;
  std::size_t idx = 0;
  std::size_t radix = 1;
  for (int k = 0; k < eta.size(); ++k) {
    idx += radix * static_cast<std::size_t>((eta[k] + q) / 2);
    radix *= static_cast<std::size_t>(q + 1);
  }
  return idx;
}

std::size_t coarse_state_count(const LatticeGeometry& geo) {
  std::size_t n = 1;
  for (int k = 0; k < geo.n_cells; ++k) n *= static_cast<std::size_t>(geo.cell_size + 1);
  return n;
}

void for_each_spin_config(int n, const std::function<void(const SpinConfiguration&)>& fn,
                          const CapacityPolicy& caps) {
  caps.require_total(n);
  SpinConfiguration sigma;
  sigma.spins.assign(static_cast<std::size_t>(n), Spin{-1});
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    for (int i = 0; i < n; ++i) {
      sigma[i] = (mask >> i) & 1 ? Spin{+1} : Spin{-1};
    }
    fn(sigma);
  }
}

}  // namespace cgmc
