#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cgmc/oracle.hpp"
#include "cgmc/potentials.hpp"

namespace cgmc {

/// Cell-averaged long-range kernel. Translation invariance is exploited: the
/// full M x M table is stored as a profile over coarse distances,
///   profile[0]   = Jbar(k,k)  (same-cell average over distinct site pairs)
///   profile[d]   = Jbar(k,l)  for coarse distance d = 1..M/2.
struct CoarseLongRangeKernel {
  std::vector<double> profile;
  int n_cells = 0;
  int support = 0;  // largest coarse distance with a nonzero entry

  double diag() const { return profile[0]; }
  double offdiag(int k, int l, const LatticeGeometry& geo) const {
    return profile[static_cast<std::size_t>(geo.coarse_distance(k, l))];
  }
};

/// Builds the coarse kernel by direct double loops over one representative
/// cell pair per coarse distance.
CoarseLongRangeKernel build_coarse_kernel(const ModelSpec& model, const LatticeGeometry& geo);

/// Block-averaged long-range energy:
///   -(1/2) sum_{k} sum_{l != k} Jbar(k,l) eta(k) eta(l)
///   -(1/2) sum_{k} Jbar(k,k) (eta(k)^2 - Q).
/// Equals the conditional mean of the microscopic long-range energy exactly.
double h_cg_long(const CoarseConfiguration& eta, const CoarseLongRangeKernel& kernel,
                 const LatticeGeometry& geo);

enum class TableProvenance { ExactEnumeration, InverseMc };

std::string to_string(TableProvenance p);

/// Single-cell boundary-spin correlation functions binned by block sum:
///   phi1(eta) = <s(x_1)>, phi2(eta) = <s(x_1) s(x_q)>
/// under the free-boundary constrained cell Gibbs weight. Bins never visited
/// by the sampler are absent; evaluating them is a coverage error.
class CorrelationTables {
 public:
  struct Entry {
    double phi1 = 0.0;
    double phi2 = 0.0;
    double stderr1 = 0.0;
    double stderr2 = 0.0;
  };

  CorrelationTables() = default;
  CorrelationTables(int q, double coupling, double beta, TableProvenance provenance,
                    std::uint64_t steps = 0, std::uint64_t seed = 0);

  int q() const { return q_; }
  double coupling() const { return coupling_; }
  double beta() const { return beta_; }
  TableProvenance provenance() const { return provenance_; }
  std::uint64_t steps() const { return steps_; }
  std::uint64_t seed() const { return seed_; }

  bool has(int eta) const;
  const Entry& at(int eta) const;  // throws CoverageError when absent
  void set(int eta, Entry entry);

  /// Admissible block values in increasing order.
  std::vector<int> domain() const;

 private:
  int q_ = 0;
  double coupling_ = 0.0;
  double beta_ = 1.0;
  TableProvenance provenance_ = TableProvenance::ExactEnumeration;
  std::uint64_t steps_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::optional<Entry>> entries_;
};

/// Exact tables by slice enumeration; stderr fields are zero.
CorrelationTables phi_tables_exact(int q, double coupling, double beta,
                                   const CapacityPolicy& caps = {});

/// Tables estimated by sampling the unconstrained free-boundary cell Gibbs
/// measure with single-spin-flip Metropolis moves and histogramming the
/// samples by block sum. Standard errors are batch means over the retained
/// stream.
CorrelationTables phi_tables_mc(int q, double coupling, double beta, std::uint64_t steps,
                                std::uint64_t seed, std::uint64_t burn_in);

/// One-body coarse potential: -(1/beta) log of the free-boundary constrained
/// cell partition function.
double one_body_potential(int eta, int q, double coupling, double beta,
                          const CapacityPolicy& caps = {});

/// Three-body coarse interaction in closed form:
///   -(2/beta) log a - (1/beta) log(1 - lambda p1(l) p1(m) - lambda p1(m) p1(r)
///                                  + lambda^2 p1(l) p2(m) p1(r))
/// with lambda = tanh(beta K), a = cosh(beta K). Throws SingularityError when
/// the logarithm argument is not positive.
double three_body_potential(int eta_left, int eta_mid, int eta_right,
                            const CorrelationTables& tables, double lambda, double a,
                            double beta);

/// Assembled coarse Hamiltonian: analytical long-range part plus one-body
/// terms on every cell plus three-body terms centered on even cells.
struct CoarseHamiltonian {
  std::optional<CoarseLongRangeKernel> kernel;
  CorrelationTables tables;
  double lambda = 0.0;  // tanh(beta K)
  double a = 1.0;       // cosh(beta K)
  double b = 0.0;       // sinh(beta K); kept for completeness, unused
  std::vector<double> one_body;  // indexed by (eta+q)/2
  double beta = 1.0;
  int q = 0;

  static CoarseHamiltonian build(const ModelSpec& model, const LatticeGeometry& geo,
                                 CorrelationTables tables, const CapacityPolicy& caps = {});
  /// Convenience build with exact tables.
  static CoarseHamiltonian build_exact(const ModelSpec& model, const LatticeGeometry& geo,
                                       const CapacityPolicy& caps = {});

  double one_body_at(int eta) const { return one_body[static_cast<std::size_t>((eta + q) / 2)]; }
};

/// Full coarse Hamiltonian value at eta.
double h_cg0(const CoarseConfiguration& eta, const CoarseHamiltonian& cgh,
             const LatticeGeometry& geo);

/// Energy change of the single-block update eta(cell) -> new_value, touching
/// only the kernel row of the cell and the at most three three-body terms
/// containing it.
double h_cg0_delta(const CoarseConfiguration& eta, int cell, int new_value,
                   const CoarseHamiltonian& cgh, const LatticeGeometry& geo);

/// Alternative assembly used as a cross-check: minus the one-body terms on
/// odd cells plus the full three-cell log partition functions on even cells
/// (plus the same long-range part). Agrees with h_cg0 identically.
double h_cg0_via_three_cell(const CoarseConfiguration& eta, const ModelSpec& model,
                            const LatticeGeometry& geo, const CapacityPolicy& caps = {});

/// Table of h_cg0 over all admissible coarse configurations (coarse_index order).
std::vector<double> h_cg0_table(const CoarseHamiltonian& cgh, const LatticeGeometry& geo);

/// Plain-text serialization of correlation tables. Header lines carry q, K,
/// beta, provenance, steps, seed; data columns are
///   eta phi1 phi2 stderr1 stderr2
/// with absent bins omitted.
void write_phi_table(std::ostream& out, const CorrelationTables& tables);
void write_phi_table_file(const std::string& path, const CorrelationTables& tables);
CorrelationTables read_phi_table(std::istream& in);
CorrelationTables read_phi_table_file(const std::string& path);

}  // namespace cgmc
