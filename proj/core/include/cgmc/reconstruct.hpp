#pragma once

#include <cstdint>
#include <vector>

#include "cgmc/cg.hpp"
#include "cgmc/sampler.hpp"

namespace cgmc {

/// First-order microscopic reconstruction settings. Exact enumeration samples
/// each cell's slice distribution directly; mcmc mode runs a sum-preserving
/// chain per cell and keeps its final state.
struct ReconstructionPlan {
  enum class Exactness { ExactEnumeration, Mcmc };
  Exactness exactness = Exactness::ExactEnumeration;
  std::uint64_t mc_steps = 4000;
  std::uint64_t mc_burn_in = 1000;

  static ReconstructionPlan pick_default(int q) {
    ReconstructionPlan plan;
    plan.exactness = q <= 12 ? Exactness::ExactEnumeration : Exactness::Mcmc;
    return plan;
  }
};

/// Draws a microscopic configuration from the two-pass conditional measure
/// given the coarse configuration: even cells first (each weighted by its own
/// energy and the two neighbor partition functions pinned to its edge spins),
/// then odd cells conditioned on the already-fixed even neighbors. The block
/// sums of the output reproduce eta exactly. Cell draws use disjoint
/// deterministic streams derived from (seed, cell).
SpinConfiguration reconstruct(const CoarseConfiguration& eta, const ModelSpec& model,
                              const LatticeGeometry& geo, const ReconstructionPlan& plan,
                              std::uint64_t seed, const CapacityPolicy& caps = {});

/// Coarse-cell index window [begin, begin+length) with periodic wraparound.
struct CellWindow {
  int begin = 0;
  int length = 0;
};

struct PartialConfiguration {
  CellWindow window;
  std::vector<Spin> spins;  // sites of the window cells, in lattice order
};

/// Reconstructs only the cells of the window (plus even halo cells used
/// internally). With the same seed, a whole-lattice window reproduces the
/// draws of reconstruct exactly.
PartialConfiguration local_reconstruct(const CoarseConfiguration& eta, const CellWindow& window,
                                       const ModelSpec& model, const LatticeGeometry& geo,
                                       const ReconstructionPlan& plan, std::uint64_t seed,
                                       const CapacityPolicy& caps = {});

/// Exact per-state probabilities of the reconstruction measure given eta,
/// over all 2^N states (desk scale only).
std::vector<double> exact_reconstruction_law(const CoarseConfiguration& eta,
                                             const ModelSpec& model, const LatticeGeometry& geo,
                                             const CapacityPolicy& caps = {});

/// Exact per-state probabilities of the composite law: coarse Gibbs measure
/// of the assembled coarse Hamiltonian, then reconstruction.
std::vector<double> exact_composite_law(const ModelSpec& model, const LatticeGeometry& geo,
                                        const CoarseHamiltonian& cgh,
                                        const CapacityPolicy& caps = {});

struct RoundtripReport {
  double total_variation = 0.0;          // empirical vs exact Gibbs
  double analytic_total_variation = 0.0; // exact composite law vs exact Gibbs
  double tv_noise_scale = 0.0;           // expected TV of pure sampling noise
  double magnetization_gap = 0.0;
  double magnetization_stderr = 0.0;
  double energy_per_site_gap = 0.0;
  double energy_per_site_stderr = 0.0;
  std::uint64_t draws = 0;
};

/// Samples the coarse chain, reconstructs each retained coarse configuration
/// and compares the empirical microscopic law against the exact Gibbs
/// measure.
RoundtripReport roundtrip_check(const ModelSpec& model, const LatticeGeometry& geo,
                                const ReconstructionPlan& plan, const ChainConfig& cfg,
                                const CapacityPolicy& caps = {});

}  // namespace cgmc
