#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cgmc/errors.hpp"

namespace cgmc {

using Spin = std::int8_t;

/// Periodic 1-D microscopic lattice of n_sites sites partitioned into
/// n_cells coarse cells of cell_size sites each. n_cells must be even so the
/// cells split into alternating odd/even sublattices under periodic
/// wraparound. Immutable after construction.
struct LatticeGeometry {
  int n_sites = 0;   // N
  int cell_size = 0; // q sites per cell (block span Q == q in one dimension)
  int n_cells = 0;   // M

  static LatticeGeometry create(int n_sites, int cell_size);

  int cell_begin(int k) const { return k * cell_size; }
  int cell_of(int x) const { return x / cell_size; }

  /// Minimal-image distance between microscopic sites.
  int micro_distance(int x, int y) const {
    int d = x - y;
    if (d < 0) d = -d;
    d %= n_sites;
    return d <= n_sites - d ? d : n_sites - d;
  }

  /// Minimal-image distance between coarse cells.
  int coarse_distance(int k, int l) const {
    int d = k - l;
    if (d < 0) d = -d;
    d %= n_cells;
    return d <= n_cells - d ? d : n_cells - d;
  }

  int wrap_site(int x) const { return ((x % n_sites) + n_sites) % n_sites; }
  int wrap_cell(int k) const { return ((k % n_cells) + n_cells) % n_cells; }
};

/// Microscopic configuration: n_sites spins, each exactly -1 or +1.
struct SpinConfiguration {
  std::vector<Spin> spins;

  int size() const { return static_cast<int>(spins.size()); }
  Spin operator[](int x) const { return spins[static_cast<std::size_t>(x)]; }
  Spin& operator[](int x) { return spins[static_cast<std::size_t>(x)]; }
};

/// Coarse configuration: per-cell block sums eta(k) in {-Q, -Q+2, ..., Q}.
struct CoarseConfiguration {
  std::vector<int> blocks;

  int size() const { return static_cast<int>(blocks.size()); }
  int operator[](int k) const { return blocks[static_cast<std::size_t>(k)]; }
  int& operator[](int k) { return blocks[static_cast<std::size_t>(k)]; }
};

/// True when eta is a reachable block sum for a cell of q spins.
bool block_value_admissible(int q, int eta);

/// Throws DomainError unless every block of eta is admissible for geo.
void validate_coarse(const CoarseConfiguration& eta, const LatticeGeometry& geo);

/// Block-sum projection: blocks[k] = sum of the spins of cell k.
CoarseConfiguration coarse_map(const SpinConfiguration& sigma, const LatticeGeometry& geo);

/// log of the single-cell prior weight: log C(q, (eta+q)/2) - q log 2.
double cell_log_prior(int q, int eta);

/// log of the product prior weight of a coarse configuration under the
/// site-wise Bernoulli(1/2) prior pushed through the block-sum map.
double coarse_prior_log_weight(const CoarseConfiguration& eta, const LatticeGeometry& geo);

/// Number of cell configurations with block sum eta: C(q, (eta+q)/2).
std::uint64_t cell_config_count(int q, int eta);

/// Enumerates the cell configurations with block sum eta in lexicographic
/// order (-1 < +1), invoking fn with a view of each. The buffer is reused.
void for_each_cell_config(int q, int eta, const std::function<void(std::span<const Spin>)>& fn,
                          const CapacityPolicy& caps = {});

/// Materialized variant of for_each_cell_config.
std::vector<std::vector<Spin>> enumerate_cell_configs(int q, int eta,
                                                      const CapacityPolicy& caps = {});

/// Enumerates all admissible coarse configurations of geo (mixed-radix order).
void for_each_coarse_config(const LatticeGeometry& geo,
                            const std::function<void(const CoarseConfiguration&)>& fn);

/// Mixed-radix index of a coarse configuration in the for_each_coarse_config
/// order; cell k contributes digit (eta(k)+q)/2 with radix q+1.
std::size_t coarse_index(const CoarseConfiguration& eta, const LatticeGeometry& geo);

/// Total count of admissible coarse configurations: (q+1)^M.
std::size_t coarse_state_count(const LatticeGeometry& geo);

/// Enumerates all 2^n spin configurations (site 0 is the fastest bit).
void for_each_spin_config(int n, const std::function<void(const SpinConfiguration&)>& fn,
                          const CapacityPolicy& caps = {});

}  // namespace cgmc
