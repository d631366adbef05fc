#include "cgmc/potentials.hpp"

#include <cmath>

#include "cgmc/stats.hpp"

namespace cgmc {

std::string to_string(KernelShape shape) {
  switch (shape) {
    case KernelShape::Constant: return "constant";
    case KernelShape::Triangular: return "triangular";
    case KernelShape::SmoothPolynomial: return "smooth";
  }
  return "constant";
}

KernelShape kernel_shape_from_string(const std::string& name) {
  if (name == "constant") return KernelShape::Constant;
  if (name == "triangular") return KernelShape::Triangular;
  if (name == "smooth" || name == "smooth-polynomial") return KernelShape::SmoothPolynomial;
  throw ConfigError("unknown kernel shape '" + name + "'");
}

LongRangeModel LongRangeModel::create(KernelShape shape, int range) {
  if (range < 1) throw ConfigError("kernel range L must be positive");
  double grad = 0.0;
  switch (shape) {
    case KernelShape::Constant: grad = 0.0; break;
    case KernelShape::Triangular: grad = 1.0; break;
    case KernelShape::SmoothPolynomial:
      // V(u) = (1-u^2)^2, |V'| maximal at u = 1/sqrt(3)
      grad = 8.0 / (3.0 * std::sqrt(3.0));
      break;
  }
  return {shape, range, grad};
}

double LongRangeModel::shape_value(double u) const {
  if (u > 1.0) return 0.0;
  switch (shape) {
    case KernelShape::Constant: return 1.0;
    case KernelShape::Triangular: return 1.0 - u;
    case KernelShape::SmoothPolynomial: {
      const double w = 1.0 - u * u;
      return w * w;
    }
  }
  return 0.0;
}

double LongRangeModel::kernel_value(int distance) const {
  if (distance < 1 || distance > range) return 0.0;
  return shape_value(static_cast<double>(distance) / range) / range;
}

ModelSpec ModelSpec::validated(ShortRangeModel s, std::optional<LongRangeModel> l, double beta) {
  if (beta <= 0.0) throw ConfigError("beta must be positive");
  return {s, std::move(l), beta};
}

double h_short(const SpinConfiguration& sigma, const ModelSpec& model, const LatticeGeometry& geo) {
  const int n = geo.n_sites;
  long long bond_sum = 0;
  for (int x = 0; x < n; ++x) {
    bond_sum += sigma[x] * sigma[(x + 1) % n];
  }
  return model.short_range.coupling * static_cast<double>(bond_sum);
}

double h_long(const SpinConfiguration& sigma, const ModelSpec& model, const LatticeGeometry& geo) {
  if (!model.long_range) return 0.0;
  const int n = geo.n_sites;
  const auto& lr = *model.long_range;
  KahanSum sum;
  const int half = n / 2;
  for (int r = 1; r <= half; ++r) {
    const double j = lr.kernel_value(r);
    if (j == 0.0) continue;
    long long pair_sum = 0;
    // at the antipodal distance of an even lattice each pair appears once
    const int x_max = (2 * r == n) ? half : n;
    for (int x = 0; x < x_max; ++x) {
      pair_sum += sigma[x] * sigma[(x + r) % n];
    }
    sum.add(j * static_cast<double>(pair_sum));
  }
  return -sum.value();
}

double h_total(const SpinConfiguration& sigma, const ModelSpec& model, const LatticeGeometry& geo) {
  return h_short(sigma, model, geo) + h_long(sigma, model, geo);
}

double cell_energy(const SpinConfiguration& sigma, int k, const ModelSpec& model,
                   const LatticeGeometry& geo) {
  const int begin = geo.cell_begin(k);
  long long bond_sum = 0;
  for (int i = 0; i < geo.cell_size - 1; ++i) {
    bond_sum += sigma[begin + i] * sigma[begin + i + 1];
  }
  return model.short_range.coupling * static_cast<double>(bond_sum);
}

double interface_energy(const SpinConfiguration& sigma, int k, const ModelSpec& model,
                        const LatticeGeometry& geo) {
  const int last = geo.cell_begin(k) + geo.cell_size - 1;
  const int next = (last + 1) % geo.n_sites;
  return model.short_range.coupling * sigma[last] * sigma[next];
}

TabulatedKernel tabulate_kernel(const LongRangeModel& model, const LatticeGeometry& geo) {
  TabulatedKernel table;
  const int half = geo.n_sites / 2;
  table.values.resize(static_cast<std::size_t>(half));
  for (int r = 1; r <= half; ++r) {
    table.values[static_cast<std::size_t>(r - 1)] = model.kernel_value(r);
  }
  return table;
}

std::pair<TabulatedKernel, TabulatedKernel> split_kernel(const TabulatedKernel& total,
                                                         int cutoff_radius) {
  if (cutoff_radius < 0) throw ConfigError("cutoff radius must be nonnegative");
  TabulatedKernel inner, outer;
  inner.values.assign(total.values.size(), 0.0);
  outer.values.assign(total.values.size(), 0.0);
  for (int r = 1; r <= total.max_distance(); ++r) {
    const double v = total.at(r);
    (r <= cutoff_radius ? inner : outer).values[static_cast<std::size_t>(r - 1)] = v;
  }
  return {inner, outer};
}

}  // namespace cgmc
