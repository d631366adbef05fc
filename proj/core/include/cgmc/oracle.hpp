#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cgmc/potentials.hpp"

namespace cgmc {

struct CoarseLongRangeKernel;  // cg.hpp

namespace oracle {

/// Boundary condition of a single cell: each side is either free or pinned to
/// a fixed spin value.
struct BoundarySpec {
  std::optional<Spin> left;
  std::optional<Spin> right;

  static BoundarySpec free_free() { return {}; }
  static BoundarySpec fixed(int left_spin, int right_spin) {
    return {static_cast<Spin>(left_spin), static_cast<Spin>(right_spin)};
  }
  static BoundarySpec fixed_left(int s) { return {static_cast<Spin>(s), std::nullopt}; }
  static BoundarySpec fixed_right(int s) { return {std::nullopt, static_cast<Spin>(s)}; }
};

/// Constrained single-cell partition function: the average over the
/// C(q,(eta+q)/2) cell configurations with block sum eta of
/// exp(-beta [ internal bond energy + pinned boundary bonds ]).
double cell_partition_function(int eta, const BoundarySpec& bc, const ModelSpec& model, int q,
                               const CapacityPolicy& caps = {});

/// Free-boundary three-cell partition function: the average over constrained
/// triples of exp(-beta [ three internal energies + the two crossing bonds ]).
double three_cell_partition_function(int eta_left, int eta_mid, int eta_right,
                                     const ModelSpec& model, int q,
                                     const CapacityPolicy& caps = {});

/// Short-range smallness term of the middle cell given pinned edge spins:
///   Z(fixed,fixed) Z(free,free) / (Z(free,fixed) Z(fixed,free)) - 1.
double f_short(int eta, int left_spin, int right_spin, const ModelSpec& model, int q,
               const CapacityPolicy& caps = {});

/// Runs fn over every microscopic configuration whose block sums equal eta,
/// composing the per-cell slices (odometer order). The buffer is reused.
void for_each_conditional_config(const CoarseConfiguration& eta, const LatticeGeometry& geo,
                                 const std::function<void(const SpinConfiguration&)>& fn,
                                 const CapacityPolicy& caps = {});

/// Exact block-averaged Hamiltonian: -(1/beta) log E[exp(-beta H) | eta],
/// with the conditional expectation over the uniform per-cell slices.
double exact_cg_hamiltonian(const CoarseConfiguration& eta, const ModelSpec& model,
                            const LatticeGeometry& geo, const CapacityPolicy& caps = {});

/// Full table of exact_cg_hamiltonian over all admissible coarse
/// configurations, indexed by coarse_index. Computed in one sweep over the
/// 2^N microscopic states.
std::vector<double> exact_cg_table(const ModelSpec& model, const LatticeGeometry& geo,
                                   const CapacityPolicy& caps = {});

struct PartitionIdentity {
  double z_micro = 0.0;
  double z_coarse = 0.0;
  double relative_gap = 0.0;
};

/// Checks that the microscopic partition function equals the block-averaged
/// one rebuilt from the exact coarse Hamiltonian and the block prior.
PartitionIdentity exact_partition_identity_check(const ModelSpec& model,
                                                 const LatticeGeometry& geo,
                                                 const CapacityPolicy& caps = {});

/// Long-range smallness term for the cell pair (j, k):
///   exp(beta * D) - 1,
/// where D sums (J - Jbar) s s over the pair's site pairs (all cross pairs
/// for j != k, unordered distinct pairs for j == k).
double f_long(std::span<const Spin> sigma_j, std::span<const Spin> sigma_k, int j, int k,
              const ModelSpec& model, const CoarseLongRangeKernel& kernel,
              const LatticeGeometry& geo);

/// Exact Gibbs expectation of an observable over all 2^N states.
double exact_gibbs_expectation(const std::function<double(const SpinConfiguration&)>& observable,
                               const ModelSpec& model, const LatticeGeometry& geo,
                               const CapacityPolicy& caps = {});

/// Exact Gibbs probability table over all 2^N states (index = bit mask with
/// site 0 the lowest bit, set bit = +1).
std::vector<double> exact_gibbs_probabilities(const ModelSpec& model, const LatticeGeometry& geo,
                                              const CapacityPolicy& caps = {});

/// Index of a configuration in the for_each_spin_config order.
std::size_t spin_state_index(const SpinConfiguration& sigma);

}  // namespace oracle
}  // namespace cgmc
