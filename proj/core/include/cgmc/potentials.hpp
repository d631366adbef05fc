#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cgmc/lattice.hpp"

namespace cgmc {

/// Nearest-neighbor coupling, H^s = K * sum over periodic bonds of s(x)s(x+1).
/// The sign is kept as written: ferromagnetic order corresponds to K < 0.
struct ShortRangeModel {
  double coupling = 0.0;          // K
  static constexpr int range = 1; // S
};

enum class KernelShape { Constant, Triangular, SmoothPolynomial };

std::string to_string(KernelShape shape);
KernelShape kernel_shape_from_string(const std::string& name);

/// Long-range pair kernel J(r) = V(r/L)/L with compactly supported shape V
/// (V(u) = 0 for u > 1), evaluated on minimal-image distances.
struct LongRangeModel {
  KernelShape shape = KernelShape::Constant;
  int range = 1;            // L
  double grad_bound = 0.0;  // sup |V'|, analytic per shape

  static LongRangeModel create(KernelShape shape, int range);

  /// Shape function V(u).
  double shape_value(double u) const;
  /// Kernel value J(r) at integer distance r >= 1 (0 for r < 1 or r > L).
  double kernel_value(int distance) const;
};

struct ModelSpec {
  ShortRangeModel short_range;
  std::optional<LongRangeModel> long_range;
  double beta = 1.0;

  static ModelSpec validated(ShortRangeModel s, std::optional<LongRangeModel> l, double beta);
};

/// Short-range energy: K * sum over the N periodic bonds, each counted once.
double h_short(const SpinConfiguration& sigma, const ModelSpec& model, const LatticeGeometry& geo);

/// Long-range energy: -(1/2) sum_{x} sum_{y != x} J(d(x,y)) s(x)s(y).
/// Returns 0 when no long-range model is present.
double h_long(const SpinConfiguration& sigma, const ModelSpec& model, const LatticeGeometry& geo);

double h_total(const SpinConfiguration& sigma, const ModelSpec& model, const LatticeGeometry& geo);

/// Energy of the q-1 bonds internal to cell k.
double cell_energy(const SpinConfiguration& sigma, int k, const ModelSpec& model,
                   const LatticeGeometry& geo);

/// Energy of the single bond crossing from cell k into cell k+1.
double interface_energy(const SpinConfiguration& sigma, int k, const ModelSpec& model,
                        const LatticeGeometry& geo);

/// Pair kernel tabulated on integer distances 1..max_distance.
struct TabulatedKernel {
  std::vector<double> values;  // values[r-1] = kernel at distance r

  int max_distance() const { return static_cast<int>(values.size()); }
  double at(int distance) const {
    return (distance >= 1 && distance <= max_distance())
               ? values[static_cast<std::size_t>(distance - 1)]
               : 0.0;
  }
};

/// Tabulates J on distances 1..floor(N/2).
TabulatedKernel tabulate_kernel(const LongRangeModel& model, const LatticeGeometry& geo);

/// Splits a tabulated kernel at a cutoff radius: the first part keeps
/// distances <= cutoff, the second the rest. Pointwise sum reproduces the
/// input exactly.
std::pair<TabulatedKernel, TabulatedKernel> split_kernel(const TabulatedKernel& total,
                                                         int cutoff_radius);

}  // namespace cgmc
