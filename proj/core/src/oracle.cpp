#include "cgmc/oracle.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "cgmc/cg.hpp"
#include "cgmc/stats.hpp"

namespace cgmc {
namespace oracle {
namespace {

double cell_span_energy(std::span<const Spin> c, double coupling) {
  long long bond_sum = 0;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) bond_sum += c[i] * c[i + 1];
  return coupling * static_cast<double>(bond_sum);
}

}  // namespace

double cell_partition_function(int eta, const BoundarySpec& bc, const ModelSpec& model, int q,
                               const CapacityPolicy& caps) {
  const double coupling = model.short_range.coupling;
  const double beta = model.beta;
  LogSumExp lse;
  for_each_cell_config(
      q, eta,
      [&](std::span<const Spin> c) {
        double e = cell_span_energy(c, coupling);
        if (bc.left) e += coupling * (*bc.left) * c.front();
        if (bc.right) e += coupling * c.back() * (*bc.right);
        lse.add(-beta * e);
      },
      caps);
  return std::exp(lse.value() - std::log(static_cast<double>(cell_config_count(q, eta))));
}

double three_cell_partition_function(int eta_left, int eta_mid, int eta_right,
                                     const ModelSpec& model, int q, const CapacityPolicy& caps) {
  caps.require_triple(q);
  const double coupling = model.short_range.coupling;
  const double beta = model.beta;
  const double total_count = static_cast<double>(cell_config_count(q, eta_left)) *
                             static_cast<double>(cell_config_count(q, eta_mid)) *
                             static_cast<double>(cell_config_count(q, eta_right));

  const double direct_budget = 2.0e7;
  if (total_count <= direct_budget) {
    LogSumExp lse;
    for_each_cell_config(q, eta_left, [&](std::span<const Spin> a) {
      const double ea = cell_span_energy(a, coupling);
      const Spin a_last = a.back();
      for_each_cell_config(q, eta_mid, [&](std::span<const Spin> b) {
        const double eb = ea + cell_span_energy(b, coupling) + coupling * a_last * b.front();
        const Spin b_last = b.back();
        for_each_cell_config(q, eta_right, [&](std::span<const Spin> c) {
          const double e =
              eb + cell_span_energy(c, coupling) + coupling * b_last * c.front();
          lse.add(-beta * e);
        });
      });
    });
    return std::exp(lse.value() - std::log(total_count));
  }

  // Large slices: integrate the outer cells first. Their contribution enters
  // only through the middle cell's edge spins.
  double left_of[2];   // index 0: edge spin -1, 1: edge spin +1
  double right_of[2];
  for (int si = 0; si < 2; ++si) {
    const int s = si == 0 ? -1 : +1;
    left_of[si] = cell_partition_function(eta_left, BoundarySpec::fixed_right(s), model, q, caps);
    right_of[si] = cell_partition_function(eta_right, BoundarySpec::fixed_left(s), model, q, caps);
  }
  LogSumExp lse;
  for_each_cell_config(
      q, eta_mid,
      [&](std::span<const Spin> b) {
        const double e = cell_span_energy(b, coupling);
        lse.add(-beta * e + std::log(left_of[b.front() > 0 ? 1 : 0]) +
                std::log(right_of[b.back() > 0 ? 1 : 0]));
      },
      caps);
  return std::exp(lse.value() - std::log(static_cast<double>(cell_config_count(q, eta_mid))));
}

double f_short(int eta, int left_spin, int right_spin, const ModelSpec& model, int q,
               const CapacityPolicy& caps) {
  const double z_both = cell_partition_function(eta, BoundarySpec::fixed(left_spin, right_spin),
                                                model, q, caps);
  const double z_free = cell_partition_function(eta, BoundarySpec::free_free(), model, q, caps);
  const double z_right = cell_partition_function(eta, BoundarySpec::fixed_right(right_spin),
                                                 model, q, caps);
  const double z_left = cell_partition_function(eta, BoundarySpec::fixed_left(left_spin), model,
                                                q, caps);
  return std::expm1(std::log(z_both) + std::log(z_free) - std::log(z_right) - std::log(z_left));
}

void for_each_conditional_config(const CoarseConfiguration& eta, const LatticeGeometry& geo,
                                 const std::function<void(const SpinConfiguration&)>& fn,
                                 const CapacityPolicy& caps) {
  caps.require_total(geo.n_sites);
  validate_coarse(eta, geo);
  const int q = geo.cell_size;
  std::vector<std::vector<std::vector<Spin>>> slices;
  slices.reserve(static_cast<std::size_t>(geo.n_cells));
  for (int k = 0; k < geo.n_cells; ++k) {
    slices.push_back(enumerate_cell_configs(q, eta[k], caps));
  }
  SpinConfiguration sigma;
  sigma.spins.assign(static_cast<std::size_t>(geo.n_sites), Spin{-1});
  std::vector<std::size_t> pick(static_cast<std::size_t>(geo.n_cells), 0);
  for (int k = 0; k < geo.n_cells; ++k) {
    const auto& c = slices[static_cast<std::size_t>(k)][0];
    std::copy(c.begin(), c.end(), sigma.spins.begin() + geo.cell_begin(k));
  }
  while (true) {
    fn(sigma);
    int k = 0;
    while (k < geo.n_cells) {
      auto& pk = pick[static_cast<std::size_t>(k)];
      const auto& slice = slices[static_cast<std::size_t>(k)];
      if (++pk < slice.size()) {
        std::copy(slice[pk].begin(), slice[pk].end(), sigma.spins.begin() + geo.cell_begin(k));
        break;
      }
      pk = 0;
      std::copy(slice[0].begin(), slice[0].end(), sigma.spins.begin() + geo.cell_begin(k));
      ++k;
    }
    if (k == geo.n_cells) break;
  }
}

namespace {

double log_conditional_count(const CoarseConfiguration& eta, const LatticeGeometry& geo) {
  KahanSum s;
  for (int k = 0; k < eta.size(); ++k) {
    s.add(std::log(static_cast<double>(cell_config_count(geo.cell_size, eta[k]))));
  }
  return s.value();
}

}  // namespace

double exact_cg_hamiltonian(const CoarseConfiguration& eta, const ModelSpec& model,
                            const LatticeGeometry& geo, const CapacityPolicy& caps) {
  LogSumExp lse;
  for_each_conditional_config(
      eta, geo, [&](const SpinConfiguration& s) { lse.add(-model.beta * h_total(s, model, geo)); },
      caps);
  const double log_mean = lse.value() - log_conditional_count(eta, geo);
  return -log_mean / model.beta;
}

std::vector<double> exact_cg_table(const ModelSpec& model, const LatticeGeometry& geo,
                                   const CapacityPolicy& caps) {
  caps.require_total(geo.n_sites);
  std::vector<LogSumExp> acc(coarse_state_count(geo));
  for_each_spin_config(
      geo.n_sites,
      [&](const SpinConfiguration& s) {
        const auto eta = coarse_map(s, geo);
        acc[coarse_index(eta, geo)].add(-model.beta * h_total(s, model, geo));
      },
      caps);
  std::vector<double> table(acc.size());
  std::size_t i = 0;
  for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
    const std::size_t idx = coarse_index(eta, geo);
    table[idx] = -(acc[idx].value() - log_conditional_count(eta, geo)) / model.beta;
    ++i;
  });
  return table;
}

PartitionIdentity exact_partition_identity_check(const ModelSpec& model,
                                                 const LatticeGeometry& geo,
                                                 const CapacityPolicy& caps) {
  LogSumExp micro;
  for_each_spin_config(
      geo.n_sites,
      [&](const SpinConfiguration& s) { micro.add(-model.beta * h_total(s, model, geo)); }, caps);
  const double log_z_micro = micro.value() - geo.n_sites * std::log(2.0);

  const auto table = exact_cg_table(model, geo, caps);
  LogSumExp coarse;
  for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
    coarse.add(coarse_prior_log_weight(eta, geo) -
               model.beta * table[coarse_index(eta, geo)]);
  });
  PartitionIdentity out;
  out.z_micro = std::exp(log_z_micro);
  out.z_coarse = std::exp(coarse.value());
  out.relative_gap = std::abs(out.z_micro - out.z_coarse) / out.z_micro;
  return out;
}

double f_long(std::span<const Spin> sigma_j, std::span<const Spin> sigma_k, int j, int k,
              const ModelSpec& model, const CoarseLongRangeKernel& kernel,
              const LatticeGeometry& geo) {
  const int q = geo.cell_size;
  KahanSum deviation;
  const auto pair_kernel = [&](int x, int y) {
    return model.long_range ? model.long_range->kernel_value(geo.micro_distance(x, y)) : 0.0;
  };
  if (j != k) {
    const double jbar = kernel.offdiag(j, k, geo);
    const int xj = geo.cell_begin(j), xk = geo.cell_begin(k);
    for (int a = 0; a < q; ++a) {
      for (int b = 0; b < q; ++b) {
        deviation.add((pair_kernel(xj + a, xk + b) - jbar) * sigma_j[a] * sigma_k[b]);
      }
    }
  } else {
    const double jbar = kernel.diag();
    const int xk = geo.cell_begin(k);
    for (int a = 0; a < q; ++a) {
      for (int b = a + 1; b < q; ++b) {
        deviation.add((pair_kernel(xk + a, xk + b) - jbar) * sigma_k[a] * sigma_k[b]);
      }
    }
  }
  return std::expm1(model.beta * deviation.value());
}

double exact_gibbs_expectation(const std::function<double(const SpinConfiguration&)>& observable,
                               const ModelSpec& model, const LatticeGeometry& geo,
                               const CapacityPolicy& caps) {
  // pass 1: the weight scale
  double max_exponent = -std::numeric_limits<double>::infinity();
  for_each_spin_config(
      geo.n_sites,
      [&](const SpinConfiguration& s) {
        max_exponent = std::max(max_exponent, -model.beta * h_total(s, model, geo));
      },
      caps);
  // pass 2: scaled sums
  KahanSum num, den;
  for_each_spin_config(
      geo.n_sites,
      [&](const SpinConfiguration& s) {
        const double w = std::exp(-model.beta * h_total(s, model, geo) - max_exponent);
        num.add(observable(s) * w);
        den.add(w);
      },
      caps);
  return num.value() / den.value();
}

std::size_t spin_state_index(const SpinConfiguration& sigma) {
  std::size_t mask = 0;
  for (int i = 0; i < sigma.size(); ++i) {
    if (sigma[i] > 0) mask |= std::size_t{1} << i;
  }
  return mask;
}

std::vector<double> exact_gibbs_probabilities(const ModelSpec& model, const LatticeGeometry& geo,
                                              const CapacityPolicy& caps) {
  caps.require_total(geo.n_sites);
  std::vector<double> log_w(static_cast<std::size_t>(1) << geo.n_sites);
  std::size_t i = 0;
  LogSumExp lse;
  for_each_spin_config(
      geo.n_sites,
      [&](const SpinConfiguration& s) {
        log_w[i] = -model.beta * h_total(s, model, geo);
        lse.add(log_w[i]);
        ++i;
      },
      caps);
  const double log_z = lse.value();
  for (auto& w : log_w) w = std::exp(w - log_z);
  return log_w;
}

}  // namespace oracle
}  // namespace cgmc
