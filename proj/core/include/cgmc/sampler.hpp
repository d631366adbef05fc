#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cgmc/cg.hpp"
#include "cgmc/oracle.hpp"
#include "cgmc/potentials.hpp"

namespace cgmc {

struct ObservableSpec {
  enum class Kind { Magnetization, Energy, BlockProfile, TwoPoint };
  Kind kind = Kind::Magnetization;
  int distance = 1;  // TwoPoint only

  static ObservableSpec magnetization() { return {Kind::Magnetization, 0}; }
  static ObservableSpec energy() { return {Kind::Energy, 0}; }
  static ObservableSpec block_profile() { return {Kind::BlockProfile, 0}; }
  static ObservableSpec two_point(int r) { return {Kind::TwoPoint, r}; }
};

/// Parses "magnetization", "energy", "block_profile" or "two_point:R".
ObservableSpec observable_from_string(const std::string& text);

struct ChainConfig {
  std::uint64_t steps = 0;    // proposed moves
  std::uint64_t burn_in = 0;  // discarded proposals, burn_in < steps
  std::uint64_t thin = 1;
  std::uint64_t seed = 0;
  std::vector<ObservableSpec> observables = {ObservableSpec::magnetization(),
                                             ObservableSpec::energy()};

  void validate() const;
  std::uint64_t retained() const { return (steps - burn_in) / thin; }
};

struct ObservableStats {
  std::string name;
  double mean = 0.0;
  double std_error = 0.0;
  double tau_int = 0.5;
  std::uint64_t count = 0;
};

struct ChainStats {
  std::vector<ObservableStats> observables;
  double acceptance_rate = 0.0;
  std::uint64_t retained = 0;
};

/// Receives one row of observable values per retained sample.
using RowSink = std::function<void(std::uint64_t step, std::span<const double> values)>;

/// Expanded per-column names for a micro chain observable list.
std::vector<std::string> micro_observable_names(const std::vector<ObservableSpec>& specs,
                                                const LatticeGeometry& geo);
std::vector<std::string> cg_observable_names(const std::vector<ObservableSpec>& specs,
                                             const LatticeGeometry& geo);

struct MicroChainResult {
  ChainStats stats;
  SpinConfiguration final_state;
  /// |energy tracked by increments - energy recomputed at the end|.
  double energy_drift = 0.0;
};

/// Single-spin-flip Metropolis chain for the microscopic Gibbs measure.
/// Local updates: nearest-neighbor bonds plus one pass over the kernel row.
MicroChainResult run_micro_chain(const ModelSpec& model, const LatticeGeometry& geo,
                                 const ChainConfig& cfg, const RowSink& sink = {});

struct CgChainResult {
  ChainStats stats;
  CoarseConfiguration final_state;
  double energy_drift = 0.0;
};

/// Single-block +-2 Metropolis chain targeting the coarse Gibbs measure
/// built from the assembled coarse Hamiltonian and the block prior.
/// Out-of-range proposals are auto-rejected.
CgChainResult run_cg_chain(const CoarseHamiltonian& cgh, const LatticeGeometry& geo,
                           const ChainConfig& cfg, const RowSink& sink = {});

/// Variant that also hands every retained coarse configuration to a callback
/// (used by reconstruction and the a posteriori estimators).
CgChainResult run_cg_chain_collect(const CoarseHamiltonian& cgh, const LatticeGeometry& geo,
                                   const ChainConfig& cfg,
                                   const std::function<void(const CoarseConfiguration&)>& on_sample,
                                   const RowSink& sink = {});

/// Receives each retained cell configuration of a constrained cell chain.
using CellSink = std::function<void(std::span<const Spin>)>;

struct ConstrainedChainResult {
  double acceptance_rate = 0.0;
  std::uint64_t retained = 0;
  std::vector<Spin> final_state;
};

/// Optional multiplicative edge weights for the constrained chain target:
/// log_left[i] applies to the first spin of the cell (index 0 for -1,
/// 1 for +1), log_right to the last spin.
struct EdgeLogFactors {
  double log_left[2] = {0.0, 0.0};
  double log_right[2] = {0.0, 0.0};

  double left(Spin s) const { return log_left[s > 0 ? 1 : 0]; }
  double right(Spin s) const { return log_right[s > 0 ? 1 : 0]; }
};

/// Sum-preserving (pair-exchange) Metropolis chain on the slice of cell
/// configurations with fixed block sum eta, targeting
///   exp(-beta [cell energy + pinned boundary bonds]) restricted to the slice.
/// Saturated slices (eta = +-q) are a single state and produce a constant
/// stream.
ConstrainedChainResult run_constrained_cell_chain(int q, int eta, const oracle::BoundarySpec& bc,
                                                  const ModelSpec& model, const ChainConfig& cfg,
                                                  const CellSink& sink = {});

/// Generalized constrained chain with explicit edge log-factors; the public
/// boundary-condition form is the special case
///   log_left(s)  = -beta K s_left s,  log_right(s) = -beta K s s_right.
ConstrainedChainResult run_constrained_cell_chain_weighted(int q, int eta,
                                                           const EdgeLogFactors& edges,
                                                           const ModelSpec& model,
                                                           const ChainConfig& cfg,
                                                           const CellSink& sink = {});

}  // namespace cgmc
