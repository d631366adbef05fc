#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "cgmc/cg.hpp"
#include "cgmc/oracle.hpp"

namespace cgmc {

/// Block-observable indicator dominating the short-range smallness term:
///   Theta(eta) = lambda^2 |phi2(eta) - phi1(eta)^2|.
double theta_indicator(int eta, const CorrelationTables& tables, double lambda);

/// Leading-order closed form of the indicator:
///   lambda^2 (q^2 - eta^2) / (q^2 (q - 1)).
double theta_analytic(int eta, int q, double lambda);

struct SmallnessRow {
  int q = 0;
  int range = 0;     // L (0 when no long-range part)
  double delta0 = 0; // sup |f_short| over (eta, edge spins), exact
  double delta1 = 0; // sup |f_long| over the evaluated configuration set
};

/// Scans the smallness terms over coarse-graining levels and kernel ranges.
/// delta0 is exact; delta1 enumerates all pair configurations when 2q fits
/// the cell cap and otherwise falls back to a deterministic extremal set
/// (aligned and alternating cells, plus sign-matched partners).
std::vector<SmallnessRow> smallness_scan(const ModelSpec& model, const LatticeGeometry& geo,
                                         std::span<const int> q_list, std::span<const int> l_list,
                                         const CapacityPolicy& caps = {});

struct HamiltonianGap {
  double max_abs_gap = 0.0;
  double per_site_gap = 0.0;
};

/// Sup-norm gap between the exact block-averaged Hamiltonian and the
/// assembled coarse Hamiltonian over all admissible coarse configurations.
HamiltonianGap hamiltonian_gap(const ModelSpec& model, const LatticeGeometry& geo,
                               const CapacityPolicy& caps = {});

/// Exact specific relative entropy of the assembled coarse Gibbs measure with
/// respect to the exact one, per microscopic site. Nonnegative.
double relative_entropy_per_site(const ModelSpec& model, const LatticeGeometry& geo,
                                 const CapacityPolicy& caps = {});

/// Residuum-based estimate of the relative entropy:
///   beta * mean(S) + log mean(exp(-beta S))
/// over samples of the residuum S along a coarse chain.
double corollary_estimate(std::span<const double> residuum_samples, double beta);

/// Same estimate with the expectation taken exactly under the assembled
/// coarse Gibbs measure (desk scale). Coincides with the exact relative
/// entropy when the residuum is the exact Hamiltonian gap.
double corollary_estimate_exact(const ModelSpec& model, const LatticeGeometry& geo,
                                const CapacityPolicy& caps = {});

struct KernelBoundCheck {
  double lhs = 0.0;          // sup_k sum_{l != k} |Delta_kl J| over the config set
  double lhs_doubled = 0.0;  // same at doubled range
  double ratio = 0.0;        // lhs / lhs_doubled (0 when degenerate)
  double empirical_c = 0.0;  // lhs / (q^2 |V'|_sup / L)
  bool pass = false;
};

/// Checks the kernel-sum bound: finiteness and the ~q^2/L scaling of
/// sup_k sum_l |Delta_kl J| across one doubling of the range.
KernelBoundCheck kernel_sum_bound_check(const ModelSpec& model, const LatticeGeometry& geo,
                                        const CapacityPolicy& caps = {});

struct ErrorReport {
  double max_abs_h_gap = 0.0;
  double per_site_gap = 0.0;
  double rel_entropy_per_site = 0.0;
  double delta0_short = 0.0;
  double delta1_long = 0.0;
  std::map<int, double> theta_profile;  // eta -> Theta(eta)
  // parameter echo
  int n_sites = 0;
  int cell_size = 0;
  double coupling = 0.0;
  double beta = 0.0;
  std::string kernel = "none";
  int range = 0;
};

/// Assembles the full oracle-backed error report at desk scale.
ErrorReport build_error_report(const ModelSpec& model, const LatticeGeometry& geo,
                               const CapacityPolicy& caps = {});

/// JSON rendering of the report.
std::string error_report_json(const ErrorReport& report);

/// One CSV row per (q, L) grid point of a sweep; includes a header line when
/// header is true.
std::string sweep_csv(std::span<const ErrorReport> reports, bool header = true);

}  // namespace cgmc
